// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0

#include "instructmt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

#include "instructmt/text.hpp"

namespace instructmt {

using nlohmann::json;

namespace {

std::string trim_trailing(const std::string& s) {
    size_t e = s.size();
    while (e > 0 && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(0, e);
}

// codepoints with whitespace removed (ChrF operates on characters, not bytes)
std::vector<uint32_t> chrf_chars(const std::string& s, bool remove_whitespace) {
    std::vector<uint32_t> out;
    for (uint32_t cp : utf8_codepoints(s)) {
        if (remove_whitespace && (cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r')) continue;
        out.push_back(cp);
    }
    return out;
}

struct OrderCounts {
    double matched = 0.0;
    double hyp_total = 0.0;
    double ref_total = 0.0;
};

void count_order(const std::vector<uint32_t>& hyp, const std::vector<uint32_t>& ref, size_t n,
                 OrderCounts& counts) {
    if (ref.size() >= n) counts.ref_total += static_cast<double>(ref.size() - n + 1);
    if (hyp.size() >= n) counts.hyp_total += static_cast<double>(hyp.size() - n + 1);
    if (hyp.size() < n || ref.size() < n) return;

    std::map<std::vector<uint32_t>, long> ref_grams;
    for (size_t i = 0; i + n <= ref.size(); ++i)
        ref_grams[std::vector<uint32_t>(ref.begin() + static_cast<long>(i),
                                        ref.begin() + static_cast<long>(i + n))] += 1;
    for (size_t i = 0; i + n <= hyp.size(); ++i) {
        auto it = ref_grams.find(std::vector<uint32_t>(hyp.begin() + static_cast<long>(i),
                                                       hyp.begin() + static_cast<long>(i + n)));
        if (it != ref_grams.end() && it->second > 0) {
            counts.matched += 1.0;
            it->second -= 1;
        }
    }
}

}  // namespace

double chrf_corpus(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                   const ChrfConfig& cfg) {
    if (hyps.size() != refs.size())
        throw std::runtime_error("hypothesis and reference counts differ: " +
                                 std::to_string(hyps.size()) + " vs " +
                                 std::to_string(refs.size()));
    if (hyps.empty()) throw std::runtime_error("chrf requires at least one segment");
    if (cfg.char_order < 1) throw std::runtime_error("chrf char_order must be at least 1");

    std::vector<OrderCounts> orders(static_cast<size_t>(cfg.char_order));
    for (size_t i = 0; i < hyps.size(); ++i) {
        const auto hyp = chrf_chars(hyps[i], cfg.remove_whitespace);
        const auto ref = chrf_chars(refs[i], cfg.remove_whitespace);
        for (int n = 1; n <= cfg.char_order; ++n)
            count_order(hyp, ref, static_cast<size_t>(n), orders[static_cast<size_t>(n - 1)]);
    }

    const double beta2 = cfg.beta * cfg.beta;
    double f_sum = 0.0;
    int used_orders = 0;
    for (const auto& oc : orders) {
        if (oc.hyp_total == 0.0 && oc.ref_total == 0.0) continue;  // effective order
        const double prec = oc.hyp_total > 0.0 ? oc.matched / oc.hyp_total : cfg.epsilon;
        const double rec = oc.ref_total > 0.0 ? oc.matched / oc.ref_total : cfg.epsilon;
        double f = 0.0;
        if (prec + rec > 0.0) f = (1.0 + beta2) * prec * rec / (beta2 * prec + rec);
        f_sum += f;
        ++used_orders;
    }
    if (used_orders == 0) return 100.0;  // both sides empty at every order
    return 100.0 * f_sum / static_cast<double>(used_orders);
}

double response_rate(const std::vector<std::string>& general_outputs,
                     const std::vector<std::string>& instruction_outputs) {
    if (general_outputs.size() != instruction_outputs.size())
        throw std::runtime_error("output list lengths differ");
    if (general_outputs.empty()) throw std::runtime_error("response rate requires at least one item");
    size_t differing = 0;
    for (size_t i = 0; i < general_outputs.size(); ++i)
        if (trim_trailing(general_outputs[i]) != trim_trailing(instruction_outputs[i]))
            ++differing;
    return 100.0 * static_cast<double>(differing) / static_cast<double>(general_outputs.size());
}

double success_rate(TaskKind kind, const std::vector<EvalTriple>& triples,
                    const ParamMap& shared_params, const Lexicon* lexicon) {
    if (triples.empty()) throw std::runtime_error("success rate requires at least one item");
    size_t ok = 0;
    for (const auto& t : triples) {
        ParamMap params = shared_params;
        for (const auto& [k, v] : t.params) params[k] = v;
        if (check_success(kind, t.src, t.output, t.general_output, params, lexicon)) ++ok;
    }
    return 100.0 * static_cast<double>(ok) / static_cast<double>(triples.size());
}

std::vector<TaskEvalRow> evaluate_tasks(const TaskDecodeFn& decode_fn, const TaskDataset& heldout,
                                        const ChrfConfig& cfg) {
    std::map<std::string, std::vector<const TaskRecord*>> by_task;
    for (const auto& rec : heldout.records) by_task[rec.task_name].push_back(&rec);

    std::vector<TaskEvalRow> rows;
    for (const auto& [task, records] : by_task) {
        if (records.empty()) {
            std::cerr << "warning: task " << task << " has no heldout records; skipped\n";
            continue;
        }
        std::vector<std::string> general, instructed, refs;
        general.reserve(records.size());
        for (const TaskRecord* rec : records) {
            general.push_back(decode_fn(*rec, false));
            instructed.push_back(decode_fn(*rec, true));
            refs.push_back(rec->tgt);
        }
        TaskEvalRow row;
        row.task = task;
        row.count = records.size();
        row.rr = response_rate(general, instructed);
        row.chrf_general = chrf_corpus(general, refs, cfg);
        row.chrf_instruction = chrf_corpus(instructed, refs, cfg);
        row.improvement = row.chrf_instruction - row.chrf_general;
        rows.push_back(std::move(row));
    }

    if (!rows.empty()) {
        TaskEvalRow avg;
        avg.task = "average";
        double total = 0.0;
        for (const auto& row : rows) {
            const double w = static_cast<double>(row.count);
            avg.rr += row.rr * w;
            avg.chrf_general += row.chrf_general * w;
            avg.chrf_instruction += row.chrf_instruction * w;
            total += w;
            avg.count += row.count;
        }
        avg.rr /= total;
        avg.chrf_general /= total;
        avg.chrf_instruction /= total;
        avg.improvement = avg.chrf_instruction - avg.chrf_general;
        rows.push_back(std::move(avg));
    }
    return rows;
}

std::vector<CompositionRow> evaluate_composition(
    const ComposedDecodeFn& decode_fn,
    const std::vector<std::pair<TaskKind, TaskKind>>& task_pairs,
    const std::vector<std::string>& join_styles, const TaskDataset& testset,
    const std::map<TaskKind, CompositionTaskContext>& contexts, const ChrfConfig& cfg) {
    if (testset.records.empty()) throw std::runtime_error("composition testset is empty");

    std::vector<CompositionRow> rows;
    for (const auto& [t1, t2] : task_pairs) {
        if (t1 == t2)
            throw std::runtime_error("cannot compose task " + task_kind_name(t1) + " with itself");
        for (const auto& style : join_styles) {
            std::vector<std::string> general, instructed, refs;
            std::vector<EvalTriple> triples1, triples2;
            std::string prompt_label;

            for (const auto& rec : testset.records) {
                const SentencePair pair{rec.id, rec.src, rec.tgt};
                auto resolve = [&](TaskKind kind) {
                    const auto ctx_it = contexts.find(kind);
                    const CompositionTaskContext ctx =
                        ctx_it == contexts.end() ? CompositionTaskContext{} : ctx_it->second;
                    return resolve_instruction(kind, pair, ctx.seed, ctx.params, ctx.lexicon);
                };
                const auto [instr1, params1] = resolve(t1);
                const auto [instr2, params2] = resolve(t2);
                const std::string joiner = style == "and" ? " and " : " ";
                const std::string composed = instr1 + joiner + instr2;
                if (prompt_label.empty()) prompt_label = composed;

                const std::string gen = decode_fn(rec, nullptr);
                const std::string out = decode_fn(rec, &composed);
                general.push_back(gen);
                instructed.push_back(out);
                refs.push_back(rec.tgt);
                triples1.push_back({rec.src, out, gen, params1});
                triples2.push_back({rec.src, out, gen, params2});
            }

            CompositionRow row;
            row.prompt = prompt_label;
            row.join_style = style;
            row.count = testset.records.size();
            row.rr = response_rate(general, instructed);
            row.chrf_general = chrf_corpus(general, refs, cfg);
            row.chrf_instruction = chrf_corpus(instructed, refs, cfg);
            const auto ctx1 = contexts.find(t1);
            const auto ctx2 = contexts.find(t2);
            row.t1_sr = success_rate(t1, triples1, {},
                                     ctx1 == contexts.end() ? nullptr : ctx1->second.lexicon);
            row.t2_sr = success_rate(t2, triples2, {},
                                     ctx2 == contexts.end() ? nullptr : ctx2->second.lexicon);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

namespace {

std::string fmt2(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", x);
    return buf;
}

std::string fmt_signed(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%+.2f", x);
    return buf;
}

void pad_to(std::string& s, size_t width) {
    while (s.size() < width) s.push_back(' ');
}

}  // namespace

std::string render_task_report(const std::vector<TaskEvalRow>& rows) {
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"Task Instruction", "RR (%)", "ChrF_general", "ChrF_instruction",
                     "Improvement"});
    for (const auto& row : rows)
        cells.push_back({row.task, fmt2(row.rr), fmt2(row.chrf_general),
                         fmt2(row.chrf_instruction), fmt_signed(row.improvement)});

    std::vector<size_t> widths(cells[0].size(), 0);
    for (const auto& row : cells)
        for (size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());

    std::string out;
    for (size_t r = 0; r < cells.size(); ++r) {
        std::string line;
        for (size_t c = 0; c < cells[r].size(); ++c) {
            std::string cell = cells[r][c];
            pad_to(cell, widths[c] + 2);
            line += cell;
        }
        out += trim_trailing(line) + "\n";
        if (r == 0 || (rows.size() > 1 && r == cells.size() - 2)) {
            out += std::string(line.size() > 2 ? line.size() - 2 : line.size(), '-') + "\n";
        }
    }
    return out;
}

std::string task_report_json(const std::vector<TaskEvalRow>& rows) {
    json j = json::array();
    for (const auto& row : rows) {
        j.push_back({{"task", row.task},
                     {"rr", row.rr},
                     {"chrf_general", row.chrf_general},
                     {"chrf_instruction", row.chrf_instruction},
                     {"improvement", row.improvement},
                     {"count", row.count}});
    }
    return j.dump(2);
}

std::string render_composition_report(const std::vector<CompositionRow>& rows) {
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"Composed Instruction", "Join", "RR (%)", "ChrF_general",
                     "ChrF_instruction", "T1 SR (%)", "T2 SR (%)"});
    for (const auto& row : rows)
        cells.push_back({row.prompt, row.join_style, fmt2(row.rr), fmt2(row.chrf_general),
                         fmt2(row.chrf_instruction), fmt2(row.t1_sr), fmt2(row.t2_sr)});

    std::vector<size_t> widths(cells[0].size(), 0);
    for (const auto& row : cells)
        for (size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());

    std::string out;
    for (size_t r = 0; r < cells.size(); ++r) {
        std::string line;
        for (size_t c = 0; c < cells[r].size(); ++c) {
            std::string cell = cells[r][c];
            pad_to(cell, widths[c] + 2);
            line += cell;
        }
        out += trim_trailing(line) + "\n";
        if (r == 0) out += std::string(line.size() > 2 ? line.size() - 2 : line.size(), '-') + "\n";
    }
    return out;
}

std::string composition_report_json(const std::vector<CompositionRow>& rows) {
    json j = json::array();
    for (const auto& row : rows) {
        j.push_back({{"prompt", row.prompt},
                     {"join_style", row.join_style},
                     {"rr", row.rr},
                     {"chrf_general", row.chrf_general},
                     {"chrf_instruction", row.chrf_instruction},
                     {"t1_sr", row.t1_sr},
                     {"t2_sr", row.t2_sr},
                     {"count", row.count}});
    }
    return j.dump(2);
}

}  // namespace instructmt
