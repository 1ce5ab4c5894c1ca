// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one pass/fail line per criterion. Criteria 1-5 are
// property checks; 6-9 run the toy pipeline end to end and read its reports.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "instructmt/corpus.hpp"
#include "instructmt/eval.hpp"
#include "instructmt/model.hpp"
#include "instructmt/pipeline.hpp"
#include "instructmt/rng.hpp"
#include "instructmt/text.hpp"

using namespace instructmt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
    return buf;
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    json j;
    in >> j;
    return j;
}

// --------------------------------------------------------------------------
// criterion 1: chrf against a brute-force n-gram counter
// --------------------------------------------------------------------------

double chrf_brute_force(const std::vector<std::string>& hyps,
                        const std::vector<std::string>& refs, const ChrfConfig& cfg) {
    auto chars_of = [](const std::string& s) {
        std::vector<uint32_t> cps;
        for (uint32_t cp : utf8_codepoints(s))
            if (cp != ' ' && cp != '\t' && cp != '\n' && cp != '\r') cps.push_back(cp);
        return cps;
    };
    double f_sum = 0.0;
    int used = 0;
    for (int n = 1; n <= cfg.char_order; ++n) {
        double matched = 0.0, hyp_total = 0.0, ref_total = 0.0;
        for (size_t i = 0; i < hyps.size(); ++i) {
            const auto h = chars_of(hyps[i]);
            const auto r = chars_of(refs[i]);
            std::map<std::u32string, long> hyp_grams, ref_grams;
            for (size_t k = 0; k + static_cast<size_t>(n) <= h.size(); ++k)
                hyp_grams[std::u32string(h.begin() + static_cast<long>(k),
                                         h.begin() + static_cast<long>(k) + n)] += 1;
            for (size_t k = 0; k + static_cast<size_t>(n) <= r.size(); ++k)
                ref_grams[std::u32string(r.begin() + static_cast<long>(k),
                                         r.begin() + static_cast<long>(k) + n)] += 1;
            for (const auto& [gram, count] : hyp_grams) {
                hyp_total += static_cast<double>(count);
                auto it = ref_grams.find(gram);
                if (it != ref_grams.end())
                    matched += static_cast<double>(std::min(count, it->second));
            }
            for (const auto& [gram, count] : ref_grams) ref_total += static_cast<double>(count);
        }
        if (hyp_total == 0.0 && ref_total == 0.0) continue;
        const double prec = hyp_total > 0.0 ? matched / hyp_total : cfg.epsilon;
        const double rec = ref_total > 0.0 ? matched / ref_total : cfg.epsilon;
        const double b2 = cfg.beta * cfg.beta;
        f_sum += (prec + rec > 0.0) ? (1.0 + b2) * prec * rec / (b2 * prec + rec) : 0.0;
        ++used;
    }
    return used == 0 ? 100.0 : 100.0 * f_sum / used;
}

Outcome criterion_chrf_oracle() {
    const auto start = Clock::now();
    Rng rng(101);
    const std::string alphabet = "abcdefgh  ij";
    const ChrfConfig cfg;
    double max_err = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::string> hyps, refs;
        const size_t n = 1 + rng.below(3);
        for (size_t i = 0; i < n; ++i) {
            std::string h, r;
            const size_t hl = rng.below(40), rl = rng.below(40);
            for (size_t k = 0; k < hl; ++k)
                h.push_back(alphabet[static_cast<size_t>(rng.below(alphabet.size()))]);
            for (size_t k = 0; k < rl; ++k)
                r.push_back(alphabet[static_cast<size_t>(rng.below(alphabet.size()))]);
            hyps.push_back(h);
            refs.push_back(r);
        }
        const double err = std::abs(chrf_corpus(hyps, refs, cfg) - chrf_brute_force(hyps, refs, cfg));
        max_err = std::max(max_err, err);
        if (err > 1e-6)
            return {false, "mismatch " + fmt(err, 9) + " on trial " + std::to_string(trial)};
    }
    for (const std::string s : {std::string("identitaet"), std::string("ab"), std::string("x y z")})
        if (chrf_corpus({s}, {s}, cfg) != 100.0)
            return {false, "identity pair did not score exactly 100"};
    const double elapsed = seconds_since(start);
    if (elapsed >= 5.0) return {false, "took " + fmt(elapsed) + "s (limit 5s)"};
    return {true, "max |diff| " + fmt(max_err, 9) + ", " + fmt(elapsed) + "s"};
}

// --------------------------------------------------------------------------
// criterion 2: filter exactness on a planted fixture
// --------------------------------------------------------------------------

Outcome criterion_filter_fixture() {
    const auto start = Clock::now();
    auto [toy, lexicon] = synthesize_toy_parallel(400, 31, 24);

    std::vector<std::pair<std::string, std::string>> langid_samples;
    for (size_t i = 200; i < 320; ++i) {
        langid_samples.emplace_back(toy.pairs[i].src, "toysrc");
        langid_samples.emplace_back(toy.pairs[i].tgt, "toytgt");
    }
    const LangIdModel langid = LangIdModel::train(langid_samples);

    ParallelCorpus fixture;
    std::set<int64_t> planted;
    int64_t id = 0;
    auto add = [&](const std::string& src, const std::string& tgt, bool bad) {
        if (bad) planted.insert(id);
        fixture.pairs.push_back({id++, src, tgt});
    };

    // 165 clean pairs (toy pairs always have a 1:1 word-count ratio)
    for (size_t i = 0; i < 165; ++i) add(toy.pairs[i].src, toy.pairs[i].tgt, false);
    // 20 length-ratio violations: 4 source words against 8 target words
    const auto src_words = split_words(toy.pairs[0].src);
    const auto tgt_words = split_words(toy.pairs[0].tgt);
    auto repeat = [](const std::string& w, int n) {
        std::string s;
        for (int i = 0; i < n; ++i) {
            if (i) s += ' ';
            s += w;
        }
        return s;
    };
    for (int i = 0; i < 20; ++i)
        add(repeat(src_words[0], 4), repeat(tgt_words[0], 8), true);
    // 5 overlong pairs: 151 words on both sides
    for (int i = 0; i < 5; ++i)
        add(repeat(src_words[0], 151), repeat(tgt_words[0], 151), true);
    // 10 wrong-language pairs: both sides in the source language
    for (int i = 0; i < 10; ++i)
        add(toy.pairs[330 + static_cast<size_t>(i)].src, toy.pairs[340 + static_cast<size_t>(i)].src,
            true);

    if (fixture.size() != 200) return {false, "fixture construction is off"};

    FilterConfig cfg;
    cfg.langid_enabled = true;
    cfg.expected_src_lang = "toysrc";
    cfg.expected_tgt_lang = "toytgt";
    auto [kept, report] = apply_filters(fixture, cfg, &langid);

    const std::set<int64_t> removed(report.removed_ids.begin(), report.removed_ids.end());
    if (removed != planted) {
        return {false, "removed " + std::to_string(removed.size()) + " ids, planted " +
                           std::to_string(planted.size())};
    }
    if (report.removed_by_rule.at("len_ratio") != 20 ||
        report.removed_by_rule.at("max_words") != 5 || report.removed_by_rule.at("langid") != 10)
        return {false, "rule attribution is off"};
    if (report.kept != 165) return {false, "kept count is off"};
    const double elapsed = seconds_since(start);
    if (elapsed >= 1.0) return {false, "took " + fmt(elapsed) + "s (limit 1s)"};
    return {true, "exactly the 35 planted ids removed, " + fmt(elapsed, 3) + "s"};
}

// --------------------------------------------------------------------------
// criterion 3: gradient check
// --------------------------------------------------------------------------

Outcome criterion_gradcheck() {
    const auto start = Clock::now();
    ModelHyper h;
    h.layers = 2;
    h.dim = 16;
    h.heads = 2;
    h.ffn = 32;
    h.max_len = 24;
    ModelParams params = init_model(h, 20, 7);
    const Batch batch = {make_batch_item({5, 9, 11}, {7, 12}),
                         make_batch_item({8, 4, 6, 13}, {10, 5, 9})};
    const ForwardResult result = forward_loss(params, batch);
    const double eps = 1e-4;
    double max_rel = 0.0;
    std::string worst;
    for (auto& [name, tensor] : params.tensors) {
        for (size_t i = 0; i < tensor.v.size(); ++i) {
            const double orig = tensor.v[i];
            tensor.v[i] = orig + eps;
            const double up = forward_loss_only(params, batch);
            tensor.v[i] = orig - eps;
            const double down = forward_loss_only(params, batch);
            tensor.v[i] = orig;
            const double fd = (up - down) / (2.0 * eps);
            const double an = result.grads.at(name).v[i];
            const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-3});
            if (rel > max_rel) {
                max_rel = rel;
                worst = name;
            }
        }
    }
    const double elapsed = seconds_since(start);
    if (max_rel > 1e-4)
        return {false, "max relative error " + fmt(max_rel, 8) + " at " + worst};
    if (elapsed >= 60.0) return {false, "took " + fmt(elapsed) + "s (limit 60s)"};
    return {true, "max relative error " + fmt(max_rel, 8) + " over all parameters, " +
                      fmt(elapsed) + "s"};
}

// --------------------------------------------------------------------------
// criterion 4: interpolation identities
// --------------------------------------------------------------------------

Outcome criterion_interpolation() {
    ModelHyper h;
    h.layers = 2;
    h.dim = 16;
    h.heads = 2;
    h.ffn = 32;
    const ModelParams base = init_model(h, 30, 1);
    ModelParams tuned = init_model(h, 30, 2);
    tuned = expand_embeddings(tuned, 2, 4, 3);

    const ModelParams at0 = interpolate(base, tuned, 0.0);
    const ModelParams at1 = interpolate(base, tuned, 1.0);
    for (const auto& [name, tensor] : base.tensors) {
        const Tensor& t0 = at0.tensors.at(name);
        const Tensor& t1 = at1.tensors.at(name);
        const Tensor& tf = tuned.tensors.at(name);
        const size_t common = std::min(tensor.v.size(), tf.v.size());
        for (size_t i = 0; i < common; ++i) {
            if (t0.v[i] != tensor.v[i]) return {false, "alpha=0 not bitwise for " + name};
            if (t1.v[i] != tf.v[i]) return {false, "alpha=1 not bitwise for " + name};
        }
    }
    double worst = 0.0;
    const ModelParams mid_a = interpolate(base, tuned, 0.5);
    const ModelParams mid_b = interpolate(base, tuned, 0.5);
    for (const auto& [name, tensor] : base.tensors) {
        const size_t common = std::min(tensor.v.size(), tuned.tensors.at(name).v.size());
        for (size_t i = 0; i < common; ++i) {
            const double sum = mid_a.tensors.at(name).v[i] + mid_b.tensors.at(name).v[i];
            const double expected = tensor.v[i] + tuned.tensors.at(name).v[i];
            worst = std::max(worst, std::abs(sum - expected));
        }
    }
    if (worst > 1e-12) return {false, "midpoint linearity off by " + fmt(worst, 16)};
    return {true, "endpoints bitwise, midpoint linearity within " + fmt(worst, 16)};
}

// --------------------------------------------------------------------------
// criterion 5: embedding expansion
// --------------------------------------------------------------------------

Outcome criterion_expansion() {
    ModelHyper h;
    h.layers = 2;
    h.dim = 32;
    h.heads = 4;
    h.ffn = 64;
    const ModelParams params = init_model(h, 50, 9);
    const Tensor& emb = params.t("embedding");

    const ModelParams expanded = expand_embeddings(params, 4, 8, 21);
    const Tensor& out = expanded.t("embedding");
    for (int64_t i = 0; i < emb.rows(); ++i)
        for (int64_t j = 0; j < emb.cols(); ++j)
            if (out.at(i, j) != emb.at(i, j))
                return {false, "pre-existing embedding row changed"};

    std::vector<double> mean(static_cast<size_t>(emb.cols()), 0.0);
    for (int64_t i = 0; i < emb.rows(); ++i)
        for (int64_t j = 0; j < emb.cols(); ++j)
            mean[static_cast<size_t>(j)] += emb.at(i, j) / static_cast<double>(emb.rows());
    double worst_norm = 0.0;
    for (int64_t r = emb.rows(); r < out.rows(); ++r) {
        double norm = 0.0;
        for (int64_t j = 0; j < emb.cols(); ++j) {
            const double d = out.at(r, j) - mean[static_cast<size_t>(j)];
            norm += d * d;
        }
        worst_norm = std::max(worst_norm, std::abs(std::sqrt(norm) - 1.0));
    }
    if (worst_norm > 1e-9) return {false, "new row norm off by " + fmt(worst_norm, 12)};

    const Tensor basis = pca_top_k(emb, 8);
    double worst_dot = 0.0;
    for (int64_t a = 0; a < 8; ++a) {
        for (int64_t b = 0; b < 8; ++b) {
            double dot = 0.0;
            for (int64_t j = 0; j < emb.cols(); ++j) dot += basis.at(j, a) * basis.at(j, b);
            worst_dot = std::max(worst_dot, std::abs(dot - (a == b ? 1.0 : 0.0)));
        }
    }
    if (worst_dot > 1e-6) return {false, "basis orthonormality off by " + fmt(worst_dot, 10)};
    return {true, "norms within " + fmt(worst_norm, 12) + ", orthonormality within " +
                      fmt(worst_dot, 10)};
}

// --------------------------------------------------------------------------
// criteria 6-9: toy pipeline analogues
// --------------------------------------------------------------------------

PipelineConfig toy_config(const std::string& out_dir, uint64_t seed) {
    json j = json::object();
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    PipelineConfig cfg = validate_config(j);
    return cfg;
}

struct ToyRun {
    double chrf_base = 0.0;
    double chrf_ft = 0.0;
    double drop = 0.0;
    std::map<std::string, double> sr;
    std::map<std::string, double> rr;
};

ToyRun read_toy_run(const std::string& dir) {
    ToyRun run;
    const json general = read_json(dir + "/general_eval.json");
    run.chrf_base = general["chrf_base"].get<double>();
    run.chrf_ft = general["chrf_finetuned"].get<double>();
    run.drop = general["drop"].get<double>();
    const json sr = read_json(dir + "/sr_report.json");
    for (const auto& [task, value] : sr.items()) run.sr[task] = value.get<double>();
    const json rows = read_json(dir + "/eval_report.json");
    for (const auto& row : rows) run.rr[row["task"].get<std::string>()] = row["rr"].get<double>();
    return run;
}

Outcome criterion_toy_end_to_end(const std::string& dir, ToyRun& run_out, double& minutes_out) {
    const auto start = Clock::now();
    fs::remove_all(dir);
    PipelineRunner runner(toy_config(dir, 7));
    runner.reproduce_toy();
    const double minutes = seconds_since(start) / 60.0;
    minutes_out = minutes;

    const ToyRun run = read_toy_run(dir);
    run_out = run;
    std::vector<std::string> problems;
    auto need_sr = [&](const std::string& task, double min_value) {
        if (!run.sr.count(task)) {
            problems.push_back("no SR for " + task);
        } else if (run.sr.at(task) < min_value) {
            problems.push_back(task + " SR " + fmt(run.sr.at(task)) + " < " + fmt(min_value));
        }
    };
    need_sr("uppercase", 90.0);
    need_sr("lowercase", 90.0);
    need_sr("add_hashtag", 80.0);
    if (!run.rr.count("empty_instruction")) {
        problems.push_back("no RR for empty_instruction");
    } else if (run.rr.at("empty_instruction") > 5.0) {
        problems.push_back("empty_instruction RR " + fmt(run.rr.at("empty_instruction")) +
                           " > 5.0");
    }
    if (std::abs(run.chrf_ft - run.chrf_base) > 2.0)
        problems.push_back("general ChrF moved " + fmt(run.chrf_ft - run.chrf_base) +
                           " points from base");
    if (minutes > 15.0) problems.push_back("runtime " + fmt(minutes) + " min > 15");

    std::string detail = "upper SR " + fmt(run.sr.count("uppercase") ? run.sr.at("uppercase") : -1) +
                         ", lower SR " + fmt(run.sr.count("lowercase") ? run.sr.at("lowercase") : -1) +
                         ", hashtag SR " +
                         fmt(run.sr.count("add_hashtag") ? run.sr.at("add_hashtag") : -1) +
                         ", empty RR " +
                         fmt(run.rr.count("empty_instruction") ? run.rr.at("empty_instruction") : -1) +
                         ", ChrF base " + fmt(run.chrf_base) + " vs ft " + fmt(run.chrf_ft) + ", " +
                         fmt(minutes) + " min";
    if (!problems.empty()) {
        std::string msg;
        for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
        return {false, msg + " [" + detail + "]"};
    }
    return {true, detail};
}

// Copies the shared artifacts of a finished run so an ablation variant only
// needs to finetune and evaluate.
void seed_ablation_dir(const std::string& from, const std::string& to) {
    fs::remove_all(to);
    fs::create_directories(to);
    for (const char* artifact :
         {"toy_train.tsv", "toy_test.tsv", "toy_lexicon.tsv", "filtered.tsv",
          "filter_report.json", "vocab.json", "tasks_all.jsonl", "tasks_train.jsonl",
          "tasks_heldout.jsonl", "base.ckpt", "base_loss.json"})
        fs::copy_file(fs::path(from) / artifact, fs::path(to) / artifact);
}

Outcome criterion_ablations(const std::string& main_dir, const ToyRun& mixed,
                            ToyRun& no_parallel_out, ToyRun& no_tokens_out) {
    // no-parallel run
    const std::string np_dir = main_dir + "_no_parallel";
    seed_ablation_dir(main_dir, np_dir);
    PipelineConfig np_cfg = toy_config(np_dir, 7);
    np_cfg.mix.no_parallel = true;
    np_cfg.corpus.path = np_dir + "/toy_train.tsv";
    np_cfg.corpus.test_path = np_dir + "/toy_test.tsv";
    {
        PipelineRunner runner(np_cfg);
        runner.finetune();
        runner.evaluate();
    }
    const ToyRun np = read_toy_run(np_dir);
    no_parallel_out = np;

    // no-instruction-tokens run (also without parallel data, matching the
    // published ablation pairing)
    const std::string nt_dir = main_dir + "_no_tokens";
    seed_ablation_dir(main_dir, nt_dir);
    PipelineConfig nt_cfg = toy_config(nt_dir, 7);
    nt_cfg.mix.no_parallel = true;
    nt_cfg.mix.no_instruction_tokens = true;
    nt_cfg.corpus.path = nt_dir + "/toy_train.tsv";
    nt_cfg.corpus.test_path = nt_dir + "/toy_test.tsv";
    {
        PipelineRunner runner(nt_cfg);
        runner.finetune();
        runner.evaluate();
    }
    const ToyRun nt = read_toy_run(nt_dir);
    no_tokens_out = nt;

    std::vector<std::string> problems;
    if (np.drop < mixed.drop)
        problems.push_back("no-parallel drop " + fmt(np.drop) + " < mixed drop " +
                           fmt(mixed.drop));
    if (nt.chrf_ft > np.chrf_ft)
        problems.push_back("no-tokens general ChrF " + fmt(nt.chrf_ft) +
                           " > tokens-enabled " + fmt(np.chrf_ft));
    const std::string detail = "drops: mixed " + fmt(mixed.drop) + ", no-parallel " +
                               fmt(np.drop) + "; general ChrF: tokens " + fmt(np.chrf_ft) +
                               ", no-tokens " + fmt(nt.chrf_ft);
    if (!problems.empty()) {
        std::string msg;
        for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
        return {false, msg + " [" + detail + "]"};
    }
    return {true, detail};
}

Outcome criterion_composition(const std::string& dir) {
    const json rows = read_json(dir + "/compose_report.json");
    bool has_space = false, has_and = false, any_joint = false;
    std::string detail;
    for (const auto& row : rows) {
        const std::string style = row["join_style"].get<std::string>();
        if (style == "space") has_space = true;
        if (style == "and") has_and = true;
        const double t1 = row["t1_sr"].get<double>();
        const double t2 = row["t2_sr"].get<double>();
        if (t1 > 0.0 && t2 > 0.0) any_joint = true;
        detail += (detail.empty() ? "" : "; ") + style + ": T1 " + fmt(t1) + ", T2 " + fmt(t2);
    }
    if (!has_space || !has_and) return {false, "missing a join style [" + detail + "]"};
    if (!any_joint) return {false, "no join style had both SRs > 0 [" + detail + "]"};
    return {true, detail};
}

Outcome criterion_determinism(const std::string& dir_a, const std::string& dir_b) {
    const auto start = Clock::now();
    fs::remove_all(dir_b);
    PipelineRunner runner(toy_config(dir_b, 7));
    runner.reproduce_toy();

    std::vector<std::string> differing;
    for (const char* artifact :
         {"toy_train.tsv", "filtered.tsv", "filter_report.json", "vocab.json",
          "vocab_finetuned.json", "tasks_train.jsonl", "tasks_heldout.jsonl", "base.ckpt",
          "finetuned.ckpt", "eval_report.json", "eval_report.txt", "sr_report.json",
          "general_eval.json", "compose_report.json", "compose_report.txt"}) {
        std::ifstream a(fs::path(dir_a) / artifact, std::ios::binary);
        std::ifstream b(fs::path(dir_b) / artifact, std::ios::binary);
        if (!a || !b) {
            differing.push_back(std::string(artifact) + " (missing)");
            continue;
        }
        const std::string sa((std::istreambuf_iterator<char>(a)),
                             std::istreambuf_iterator<char>());
        const std::string sb((std::istreambuf_iterator<char>(b)),
                             std::istreambuf_iterator<char>());
        if (sa != sb) differing.push_back(artifact);
    }
    if (!differing.empty()) {
        std::string msg = "artifacts differ:";
        for (const auto& d : differing) msg += " " + d;
        return {false, msg};
    }
    return {true, "15 artifacts byte-identical across runs, " + fmt(seconds_since(start) / 60.0) +
                      " min"};
}

}  // namespace

int main(int argc, char** argv) {
    std::string work_root = (fs::temp_directory_path() / "instructmt_acceptance").string();
    if (argc > 1) work_root = argv[1];
    fs::create_directories(work_root);
    const std::string run_a = work_root + "/run_a";
    const std::string run_b = work_root + "/run_b";

    int failures = 0;
    auto report = [&failures](int number, const std::string& name, const Outcome& outcome) {
        std::printf("[%s] %d. %s: %s\n", outcome.passed ? "PASS" : "FAIL", number, name.c_str(),
                    outcome.detail.c_str());
        std::fflush(stdout);
        if (!outcome.passed) ++failures;
    };

    report(1, "ChrF matches the brute-force n-gram oracle", criterion_chrf_oracle());
    report(2, "filter removes exactly the planted violations", criterion_filter_fixture());
    report(3, "gradients match central finite differences", criterion_gradcheck());
    report(4, "interpolation identities", criterion_interpolation());
    report(5, "embedding expansion properties", criterion_expansion());

    ToyRun mixed;
    double minutes = 0.0;
    Outcome toy = criterion_toy_end_to_end(run_a, mixed, minutes);
    report(6, "toy end-to-end instruction following", toy);

    if (toy.passed || fs::exists(run_a + "/general_eval.json")) {
        ToyRun np, nt;
        report(7, "ablation directions", criterion_ablations(run_a, mixed, np, nt));
        report(8, "zero-shot composition", criterion_composition(run_a));
        report(9, "determinism across identical runs", criterion_determinism(run_a, run_b));
    } else {
        report(7, "ablation directions", {false, "toy run unavailable"});
        report(8, "zero-shot composition", {false, "toy run unavailable"});
        report(9, "determinism across identical runs", {false, "toy run unavailable"});
    }

    if (failures == 0) {
        std::printf("all acceptance criteria passed\n");
    } else {
        std::printf("%d acceptance criteria failed\n", failures);
    }
    return failures == 0 ? 0 : 1;
}
