// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0

#include "instructmt/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "instructmt/rng.hpp"
#include "instructmt/text.hpp"

namespace instructmt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// config parsing
// ---------------------------------------------------------------------------

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw ConfigError("unknown config key \"" + where + "." + key + "\"");
    }
}

template <class T>
T get_or(const json& j, const char* key, T def) {
    if (!j.contains(key)) return def;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key \"") + key + "\" has the wrong type");
    }
}

std::pair<int, int> parse_ratio(const std::string& s) {
    const size_t colon = s.find(':');
    if (colon == std::string::npos) throw ConfigError("mix.ratio must look like \"2:1\"");
    int p = 0, q = 0;
    try {
        p = std::stoi(s.substr(0, colon));
        q = std::stoi(s.substr(colon + 1));
    } catch (const std::exception&) {
        throw ConfigError("mix.ratio must look like \"2:1\"");
    }
    if (p <= 0 || q <= 0) throw ConfigError("mix.ratio components must be positive");
    return {p, q};
}

TrainConfig parse_train(const json& j, const std::string& where, double default_lr) {
    check_keys(j, where,
               {"epochs", "batch_size", "lr", "beta1", "beta2", "adam_eps", "clip_norm",
                "warmup_steps"});
    TrainConfig cfg;
    cfg.epochs = get_or(j, "epochs", 3);
    cfg.batch_size = get_or(j, "batch_size", 16);
    cfg.lr = get_or(j, "lr", default_lr);
    cfg.beta1 = get_or(j, "beta1", 0.9);
    cfg.beta2 = get_or(j, "beta2", 0.98);
    cfg.adam_eps = get_or(j, "adam_eps", 1e-9);
    cfg.clip_norm = get_or(j, "clip_norm", 1.0);
    cfg.warmup_steps = get_or(j, "warmup_steps", 200);
    if (cfg.epochs < 1) throw ConfigError(where + ".epochs must be at least 1");
    if (cfg.batch_size < 1) throw ConfigError(where + ".batch_size must be at least 1");
    if (cfg.lr <= 0.0) throw ConfigError(where + ".lr must be positive");
    return cfg;
}

std::string hash_hex(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write file: " + path);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("failed writing file: " + path);
    }
    fs::rename(tmp, path);
}

const Lexicon* lexicon_for_kind(TaskKind kind, const Lexicon* translation, const Lexicon* antonym,
                                const Lexicon* profanity) {
    switch (kind) {
        case TaskKind::translate_x_to_y:
            return translation;
        case TaskKind::add_antonyms:
            return antonym;
        case TaskKind::remove_profanity:
            return profanity;
        default:
            return nullptr;
    }
}

}  // namespace

PipelineConfig validate_config(const json& j) {
    check_keys(j, "config",
               {"seed", "out_dir", "corpus", "toy", "filter", "tokenizer", "model", "train_base",
                "finetune", "pca_rank", "tasks", "external_tasks", "lexicons", "mix", "split",
                "chrf", "compose", "interpolate", "eval_thresholds"});
    PipelineConfig cfg;
    cfg.seed = get_or<uint64_t>(j, "seed", 7);
    cfg.out_dir = get_or<std::string>(j, "out_dir", "runs/toy");

    if (j.contains("corpus")) {
        const json& c = j.at("corpus");
        check_keys(c, "corpus", {"path", "test_path", "format"});
        cfg.corpus.path = get_or<std::string>(c, "path", "");
        cfg.corpus.test_path = get_or<std::string>(c, "test_path", "");
        cfg.corpus.format = get_or<std::string>(c, "format", "tsv");
        if (cfg.corpus.format != "tsv" && cfg.corpus.format != "jsonl")
            throw ConfigError("corpus.format must be \"tsv\" or \"jsonl\"");
    }
    if (j.contains("toy")) {
        const json& t = j.at("toy");
        check_keys(t, "toy", {"pairs", "test_pairs", "lexicon_size"});
        cfg.toy.pairs = get_or<size_t>(t, "pairs", cfg.toy.pairs);
        cfg.toy.test_pairs = get_or<size_t>(t, "test_pairs", cfg.toy.test_pairs);
        cfg.toy.lexicon_size = get_or<size_t>(t, "lexicon_size", cfg.toy.lexicon_size);
        if (cfg.toy.pairs < 1) throw ConfigError("toy.pairs must be at least 1");
        if (cfg.toy.lexicon_size < 10) throw ConfigError("toy.lexicon_size must be at least 10");
    }
    if (j.contains("filter")) {
        const json& f = j.at("filter");
        check_keys(f, "filter",
                   {"max_len_ratio", "max_words", "langid_enabled", "expected_src_lang",
                    "expected_tgt_lang", "langid_train_path"});
        cfg.filter.max_len_ratio = get_or(f, "max_len_ratio", 1.3);
        cfg.filter.max_words = get_or(f, "max_words", 150);
        cfg.filter.langid_enabled = get_or(f, "langid_enabled", false);
        cfg.filter.expected_src_lang = get_or<std::string>(f, "expected_src_lang", "");
        cfg.filter.expected_tgt_lang = get_or<std::string>(f, "expected_tgt_lang", "");
        cfg.langid_train_path = get_or<std::string>(f, "langid_train_path", "");
        if (cfg.filter.max_len_ratio <= 1.0)
            throw ConfigError("filter.max_len_ratio must exceed 1");
        if (cfg.filter.max_words < 1) throw ConfigError("filter.max_words must be at least 1");
        if (cfg.filter.langid_enabled && cfg.langid_train_path.empty())
            throw ConfigError("filter.langid_enabled requires filter.langid_train_path");
    }
    if (j.contains("tokenizer")) {
        const json& t = j.at("tokenizer");
        check_keys(t, "tokenizer", {"vocab_size"});
        cfg.tokenizer.vocab_size = get_or(t, "vocab_size", 512);
        if (cfg.tokenizer.vocab_size <= Vocab::kNumReserved + Vocab::kNumBytes)
            throw ConfigError("tokenizer.vocab_size must exceed the reserved + byte inventory");
    }
    if (j.contains("model")) {
        const json& m = j.at("model");
        check_keys(m, "model", {"layers", "dim", "heads", "ffn", "max_len"});
        cfg.model.layers = get_or(m, "layers", 2);
        cfg.model.dim = get_or(m, "dim", 64);
        cfg.model.heads = get_or(m, "heads", 4);
        cfg.model.ffn = get_or(m, "ffn", 256);
        cfg.model.max_len = get_or(m, "max_len", 160);
        if (cfg.model.dim % cfg.model.heads != 0)
            throw ConfigError("model.dim must be divisible by model.heads");
    }
    cfg.train_base = parse_train(j.contains("train_base") ? j.at("train_base") : json::object(),
                                 "train_base", 1e-3);
    cfg.finetune = parse_train(j.contains("finetune") ? j.at("finetune") : json::object(),
                               "finetune", 5e-4);
    cfg.pca_rank = get_or(j, "pca_rank", 8);
    if (cfg.pca_rank < 0) throw ConfigError("pca_rank must be non-negative");

    if (j.contains("tasks")) {
        if (!j.at("tasks").is_array()) throw ConfigError("tasks must be an array");
        for (const auto& t : j.at("tasks")) {
            check_keys(t, "tasks[]", {"kind", "samples", "instruction_template", "params", "seed"});
            TaskSpec spec;
            if (!t.contains("kind")) throw ConfigError("tasks[].kind is required");
            spec.kind = task_kind_from_name(t.at("kind").get<std::string>());
            if (spec.kind == TaskKind::external)
                throw ConfigError("external tasks are ingested, not synthesized");
            spec.samples = get_or<size_t>(t, "samples", 256);
            spec.instruction_template = get_or<std::string>(t, "instruction_template", "");
            spec.seed = get_or<uint64_t>(t, "seed", 0);
            if (t.contains("params"))
                for (const auto& [k, v] : t.at("params").items())
                    spec.params[k] = v.get<std::string>();
            cfg.tasks.push_back(std::move(spec));
        }
    } else {
        for (const char* kind : {"uppercase", "lowercase", "remove_punctuation", "leetify",
                                 "shuffle_words", "add_hashtag", "insert_x_begin",
                                 "empty_instruction"}) {
            TaskSpec spec;
            spec.kind = task_kind_from_name(kind);
            spec.samples = 256;
            cfg.tasks.push_back(spec);
        }
    }
    cfg.external_tasks_path = get_or<std::string>(j, "external_tasks", "");

    if (j.contains("lexicons")) {
        const json& l = j.at("lexicons");
        check_keys(l, "lexicons", {"translation", "antonym", "profanity"});
        cfg.lexicons.translation = get_or<std::string>(l, "translation", "");
        cfg.lexicons.antonym = get_or<std::string>(l, "antonym", "");
        cfg.lexicons.profanity = get_or<std::string>(l, "profanity", "");
    }
    if (j.contains("mix")) {
        const json& m = j.at("mix");
        check_keys(m, "mix", {"ratio", "no_parallel", "no_instruction_tokens", "export_epochs"});
        const auto [p, q] = parse_ratio(get_or<std::string>(m, "ratio", "2:1"));
        cfg.mix.ratio_parallel = p;
        cfg.mix.ratio_task = q;
        cfg.mix.no_parallel = get_or(m, "no_parallel", false);
        cfg.mix.no_instruction_tokens = get_or(m, "no_instruction_tokens", false);
        cfg.export_epochs = get_or(m, "export_epochs", false);
    }
    if (j.contains("split")) {
        const json& s = j.at("split");
        check_keys(s, "split", {"train_fraction"});
        cfg.split.train_fraction = get_or(s, "train_fraction", 0.9);
        if (cfg.split.train_fraction <= 0.0 || cfg.split.train_fraction >= 1.0)
            throw ConfigError("split.train_fraction must lie strictly between 0 and 1");
    }
    if (j.contains("chrf")) {
        const json& c = j.at("chrf");
        check_keys(c, "chrf", {"char_order", "beta", "epsilon"});
        cfg.chrf.char_order = get_or(c, "char_order", 6);
        cfg.chrf.beta = get_or(c, "beta", 2.0);
        cfg.chrf.epsilon = get_or(c, "epsilon", 1e-16);
        if (cfg.chrf.char_order < 1) throw ConfigError("chrf.char_order must be at least 1");
        if (cfg.chrf.beta <= 0.0) throw ConfigError("chrf.beta must be positive");
    }
    if (j.contains("compose")) {
        const json& c = j.at("compose");
        check_keys(c, "compose", {"pairs", "join_styles", "items"});
        if (c.contains("pairs")) {
            cfg.compose.pairs.clear();
            for (const auto& p : c.at("pairs")) {
                if (!p.is_array() || p.size() != 2)
                    throw ConfigError("compose.pairs entries must be [task, task]");
                cfg.compose.pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
            }
        }
        if (c.contains("join_styles")) {
            cfg.compose.join_styles.clear();
            for (const auto& s : c.at("join_styles")) {
                const std::string style = s.get<std::string>();
                if (style != "space" && style != "and")
                    throw ConfigError("compose.join_styles entries must be \"space\" or \"and\"");
                cfg.compose.join_styles.push_back(style);
            }
        }
        cfg.compose.items = get_or<size_t>(c, "items", 40);
    }
    if (j.contains("interpolate")) {
        const json& i = j.at("interpolate");
        check_keys(i, "interpolate",
                   {"enabled", "grid", "perf_weight", "test_items", "sr_items_per_task"});
        cfg.interpolate.enabled = get_or(i, "enabled", false);
        if (i.contains("grid")) {
            cfg.interpolate.grid = i.at("grid").get<std::vector<double>>();
            for (double a : cfg.interpolate.grid)
                if (a < 0.0 || a > 1.0)
                    throw ConfigError("interpolate.grid values must lie in [0,1]");
            if (cfg.interpolate.grid.empty())
                throw ConfigError("interpolate.grid must be non-empty");
            std::sort(cfg.interpolate.grid.begin(), cfg.interpolate.grid.end());
        }
        cfg.interpolate.perf_weight = get_or(i, "perf_weight", 0.5);
        cfg.interpolate.test_items = get_or<size_t>(i, "test_items", 32);
        cfg.interpolate.sr_items_per_task = get_or<size_t>(i, "sr_items_per_task", 8);
        if (cfg.interpolate.perf_weight < 0.0 || cfg.interpolate.perf_weight > 1.0)
            throw ConfigError("interpolate.perf_weight must lie in [0,1]");
    }
    if (j.contains("eval_thresholds")) {
        const json& t = j.at("eval_thresholds");
        check_keys(t, "eval_thresholds", {"sr_min", "rr_max", "general_chrf_max_drop"});
        if (t.contains("sr_min"))
            for (const auto& [k, v] : t.at("sr_min").items())
                cfg.thresholds.sr_min[k] = v.get<double>();
        if (t.contains("rr_max"))
            for (const auto& [k, v] : t.at("rr_max").items())
                cfg.thresholds.rr_max[k] = v.get<double>();
        cfg.thresholds.general_chrf_max_drop = get_or(t, "general_chrf_max_drop", -1.0);
    }
    return cfg;
}

PipelineConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
    return validate_config(j);
}

json config_to_json(const PipelineConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["out_dir"] = cfg.out_dir;
    j["corpus"] = {{"path", cfg.corpus.path},
                   {"test_path", cfg.corpus.test_path},
                   {"format", cfg.corpus.format}};
    j["toy"] = {{"pairs", cfg.toy.pairs},
                {"test_pairs", cfg.toy.test_pairs},
                {"lexicon_size", cfg.toy.lexicon_size}};
    j["filter"] = {{"max_len_ratio", cfg.filter.max_len_ratio},
                   {"max_words", cfg.filter.max_words},
                   {"langid_enabled", cfg.filter.langid_enabled},
                   {"expected_src_lang", cfg.filter.expected_src_lang},
                   {"expected_tgt_lang", cfg.filter.expected_tgt_lang},
                   {"langid_train_path", cfg.langid_train_path}};
    j["tokenizer"] = {{"vocab_size", cfg.tokenizer.vocab_size}};
    j["model"] = {{"layers", cfg.model.layers},
                  {"dim", cfg.model.dim},
                  {"heads", cfg.model.heads},
                  {"ffn", cfg.model.ffn},
                  {"max_len", cfg.model.max_len}};
    auto train_json = [](const TrainConfig& t) {
        return json{{"epochs", t.epochs},     {"batch_size", t.batch_size},
                    {"lr", t.lr},             {"beta1", t.beta1},
                    {"beta2", t.beta2},       {"adam_eps", t.adam_eps},
                    {"clip_norm", t.clip_norm}, {"warmup_steps", t.warmup_steps}};
    };
    j["train_base"] = train_json(cfg.train_base);
    j["finetune"] = train_json(cfg.finetune);
    j["pca_rank"] = cfg.pca_rank;
    json tasks = json::array();
    for (const auto& spec : cfg.tasks) {
        json t;
        t["kind"] = task_kind_name(spec.kind);
        t["samples"] = spec.samples;
        t["instruction_template"] = spec.instruction_template;
        t["seed"] = spec.seed;
        json params = json::object();
        for (const auto& [k, v] : spec.params) params[k] = v;
        t["params"] = params;
        tasks.push_back(t);
    }
    j["tasks"] = tasks;
    j["external_tasks"] = cfg.external_tasks_path;
    j["lexicons"] = {{"translation", cfg.lexicons.translation},
                     {"antonym", cfg.lexicons.antonym},
                     {"profanity", cfg.lexicons.profanity}};
    j["mix"] = {{"ratio", std::to_string(cfg.mix.ratio_parallel) + ":" +
                              std::to_string(cfg.mix.ratio_task)},
                {"no_parallel", cfg.mix.no_parallel},
                {"no_instruction_tokens", cfg.mix.no_instruction_tokens},
                {"export_epochs", cfg.export_epochs}};
    j["split"] = {{"train_fraction", cfg.split.train_fraction}};
    j["chrf"] = {{"char_order", cfg.chrf.char_order},
                 {"beta", cfg.chrf.beta},
                 {"epsilon", cfg.chrf.epsilon}};
    json pairs = json::array();
    for (const auto& [a, b] : cfg.compose.pairs) pairs.push_back({a, b});
    j["compose"] = {{"pairs", pairs},
                    {"join_styles", cfg.compose.join_styles},
                    {"items", cfg.compose.items}};
    j["interpolate"] = {{"enabled", cfg.interpolate.enabled},
                        {"grid", cfg.interpolate.grid},
                        {"perf_weight", cfg.interpolate.perf_weight},
                        {"test_items", cfg.interpolate.test_items},
                        {"sr_items_per_task", cfg.interpolate.sr_items_per_task}};
    j["eval_thresholds"] = {{"sr_min", cfg.thresholds.sr_min},
                            {"rr_max", cfg.thresholds.rr_max},
                            {"general_chrf_max_drop", cfg.thresholds.general_chrf_max_drop}};
    return j;
}

uint64_t config_hash(const PipelineConfig& cfg) {
    const std::string s = config_to_json(cfg).dump();
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void apply_override(json& j, const std::string& assignment) {
    const size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like key.path=value: " + assignment);
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    json* node = &j;
    size_t start = 0;
    for (;;) {
        const size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) throw ConfigError("empty key segment in override: " + assignment);
        if (dot == std::string::npos) {
            json parsed;
            try {
                parsed = json::parse(value);
            } catch (const json::parse_error&) {
                parsed = value;  // plain string
            }
            (*node)[key] = parsed;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

uint64_t file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file for hashing: " + path);
    uint64_t h = 1469598103934665603ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (in.eof()) break;
    }
    return h;
}

// ---------------------------------------------------------------------------
// runner
// ---------------------------------------------------------------------------

PipelineRunner::PipelineRunner(PipelineConfig cfg, bool force)
    : cfg_(std::move(cfg)), force_(force) {
    fs::create_directories(cfg_.out_dir);
}

std::string PipelineRunner::path(const std::string& name) const {
    return (fs::path(cfg_.out_dir) / name).string();
}

void PipelineRunner::require(const std::string& artifact,
                             const std::string& producing_stage) const {
    if (!fs::exists(path(artifact)))
        throw PrereqError("missing artifact " + artifact + "; run the " + producing_stage +
                          " stage first");
}

bool PipelineRunner::run_stage(const std::string& stage, const StageIo& io,
                               const std::function<void()>& body) {
    const std::string manifest_path = path("manifest_" + stage + ".json");
    const std::string cfg_hash = hash_hex(config_hash(cfg_));

    if (fs::exists(manifest_path) && !force_) {
        json manifest;
        std::ifstream in(manifest_path);
        in >> manifest;
        if (manifest.value("config_hash", "") != cfg_hash)
            throw ConfigError("config hash mismatch on resume for stage " + stage +
                              "; use --force or a fresh output directory");
        bool unchanged = true;
        const json recorded_inputs = manifest.value("inputs", json::object());
        const json recorded_outputs = manifest.value("outputs", json::object());
        for (const auto& [file, recorded] : recorded_inputs.items())
            if (!fs::exists(file) || hash_hex(file_hash(file)) != recorded.get<std::string>())
                unchanged = false;
        for (const auto& [file, recorded] : recorded_outputs.items())
            if (!fs::exists(file) || hash_hex(file_hash(file)) != recorded.get<std::string>())
                unchanged = false;
        if (unchanged) {
            std::cerr << "[" << stage << "] up to date, skipping\n";
            return false;
        }
    }

    const auto t0 = std::chrono::steady_clock::now();
    body();
    const auto t1 = std::chrono::steady_clock::now();

    json manifest;
    manifest["stage"] = stage;
    manifest["config_hash"] = cfg_hash;
    manifest["tool_version"] = kToolVersion;
    manifest["duration_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    json inputs = json::object();
    for (const auto& file : io.inputs) inputs[file] = hash_hex(file_hash(file));
    manifest["inputs"] = inputs;
    json outputs = json::object();
    for (const auto& file : io.outputs) outputs[file] = hash_hex(file_hash(file));
    manifest["outputs"] = outputs;
    write_file_atomic(manifest_path, manifest.dump(2) + "\n");
    return true;
}

void PipelineRunner::synthesize_toy() {
    StageIo io;
    io.outputs = {path("toy_train.tsv"), path("toy_test.tsv"), path("toy_lexicon.tsv")};
    run_stage("synthesize_toy", io, [this] {
        const size_t total = cfg_.toy.pairs + cfg_.toy.test_pairs;
        auto [corpus, lexicon] = synthesize_toy_parallel(total, cfg_.seed, cfg_.toy.lexicon_size);
        ParallelCorpus train, test;
        train.provenance = corpus.provenance + "|train";
        test.provenance = corpus.provenance + "|test";
        for (size_t i = 0; i < corpus.size(); ++i) {
            if (i < cfg_.toy.pairs) {
                train.pairs.push_back(corpus.pairs[i]);
            } else {
                test.pairs.push_back(corpus.pairs[i]);
            }
        }
        save_parallel(train, path("toy_train.tsv"), CorpusFormat::tsv);
        save_parallel(test, path("toy_test.tsv"), CorpusFormat::tsv);
        save_lexicon(lexicon, path("toy_lexicon.tsv"));
    });
}

void PipelineRunner::filter() {
    if (cfg_.corpus.path.empty()) throw ConfigError("corpus.path is required for filtering");
    if (!fs::exists(cfg_.corpus.path))
        throw PrereqError("corpus file not found: " + cfg_.corpus.path);
    StageIo io;
    io.inputs = {cfg_.corpus.path};
    io.outputs = {path("filtered.tsv"), path("filter_report.json")};
    run_stage("filter", io, [this] {
        const CorpusFormat format =
            cfg_.corpus.format == "jsonl" ? CorpusFormat::jsonl : CorpusFormat::tsv;
        const ParallelCorpus corpus = load_parallel(cfg_.corpus.path, format);
        LangIdModel langid;
        const LangIdModel* langid_ptr = nullptr;
        if (cfg_.filter.langid_enabled) {
            std::vector<std::pair<std::string, std::string>> samples;
            std::ifstream in(cfg_.langid_train_path);
            if (!in)
                throw PrereqError("cannot open langid training file: " + cfg_.langid_train_path);
            std::string line;
            while (std::getline(in, line)) {
                const size_t tab = line.find('\t');
                if (tab == std::string::npos) continue;
                samples.emplace_back(line.substr(0, tab), line.substr(tab + 1));
            }
            langid = LangIdModel::train(samples);
            langid_ptr = &langid;
        }
        auto [kept, report] = apply_filters(corpus, cfg_.filter, langid_ptr);
        save_parallel(kept, path("filtered.tsv"), CorpusFormat::tsv);
        write_file_atomic(path("filter_report.json"), report.to_json() + "\n");
    });
}

void PipelineRunner::tokenize() {
    require("filtered.tsv", "filter");
    StageIo io;
    io.inputs = {path("filtered.tsv")};
    io.outputs = {path("vocab.json")};
    run_stage("tokenize", io, [this] {
        const ParallelCorpus corpus = load_parallel(path("filtered.tsv"), CorpusFormat::tsv);
        std::vector<std::string> lines;
        lines.reserve(corpus.size() * 2);
        for (const auto& pair : corpus.pairs) {
            lines.push_back(pair.src);
            lines.push_back(pair.tgt);
        }
        auto [model, vocab] = train_bpe(lines, cfg_.tokenizer.vocab_size);
        save_vocab(model, vocab, path("vocab.json"));
    });
}

void PipelineRunner::synthesize() {
    require("filtered.tsv", "filter");
    StageIo io;
    io.inputs = {path("filtered.tsv")};
    for (const auto& p :
         {cfg_.lexicons.translation, cfg_.lexicons.antonym, cfg_.lexicons.profanity})
        if (!p.empty()) io.inputs.push_back(p);
    if (!cfg_.external_tasks_path.empty()) io.inputs.push_back(cfg_.external_tasks_path);
    io.outputs = {path("tasks_all.jsonl"), path("tasks_train.jsonl"),
                  path("tasks_heldout.jsonl")};
    run_stage("synthesize", io, [this] {
        const ParallelCorpus corpus = load_parallel(path("filtered.tsv"), CorpusFormat::tsv);
        Lexicon translation, antonym, profanity;
        if (!cfg_.lexicons.translation.empty())
            translation = load_lexicon(cfg_.lexicons.translation, LexiconKind::translation);
        if (!cfg_.lexicons.antonym.empty())
            antonym = load_lexicon(cfg_.lexicons.antonym, LexiconKind::antonym);
        if (!cfg_.lexicons.profanity.empty())
            profanity = load_lexicon(cfg_.lexicons.profanity, LexiconKind::profanity);

        TaskDataset all;
        for (const auto& spec_in : cfg_.tasks) {
            TaskSpec spec = spec_in;
            if (spec.seed == 0)
                spec.seed = mix_seed(cfg_.seed, "task_spec:" + task_kind_name(spec.kind));
            const Lexicon* lex = lexicon_for_kind(
                spec.kind, cfg_.lexicons.translation.empty() ? nullptr : &translation,
                cfg_.lexicons.antonym.empty() ? nullptr : &antonym,
                cfg_.lexicons.profanity.empty() ? nullptr : &profanity);
            TaskDataset ds = synthesize_task_dataset(corpus, spec, lex);
            if (ds.records.size() < spec.samples)
                std::cerr << "warning: task " << task_kind_name(spec.kind) << " produced only "
                          << ds.records.size() << " of " << spec.samples << " samples\n";
            for (auto& rec : ds.records) all.add(std::move(rec));
        }
        if (!cfg_.external_tasks_path.empty()) {
            TaskDataset ext = ingest_external(cfg_.external_tasks_path);
            for (auto& rec : ext.records) all.add(std::move(rec));
        }
        save_task_dataset(all, path("tasks_all.jsonl"));
        SplitConfig split_cfg = cfg_.split;
        split_cfg.seed = mix_seed(cfg_.seed, "split");
        auto [train, heldout] = split_task_data(all, split_cfg);
        save_task_dataset(train, path("tasks_train.jsonl"));
        save_task_dataset(heldout, path("tasks_heldout.jsonl"));
    });
}

namespace {

// Encodes examples into batches, skipping items whose encoded form exceeds
// the model length budget.
struct ExampleEncoder {
    const BpeModel& bpe;
    const Vocab& vocab;
    const ModelHyper& hyper;
    bool tags_enabled;
    std::map<std::string, std::vector<int>>* cache = nullptr;
    size_t skipped = 0;

    std::vector<int> encode_text(const std::string& text) {
        if (cache) {
            auto it = cache->find(text);
            if (it != cache->end()) return it->second;
        }
        std::vector<int> ids = encode(bpe, vocab, text);
        if (cache) cache->emplace(text, ids);
        return ids;
    }

    bool encode_pair(const TrainingExample& ex, BatchItem& item) {
        std::vector<int> src_ids;
        if (ex.instruction_tokens.empty()) {
            src_ids = encode_text(ex.input_text);
        } else {
            src_ids = encode_example_input(ex, bpe, vocab, tags_enabled);
        }
        src_ids.push_back(Vocab::kEos);
        const std::vector<int> tgt_ids = encode_text(ex.target_text);
        if (src_ids.size() > static_cast<size_t>(hyper.max_len) ||
            tgt_ids.size() + 2 > static_cast<size_t>(hyper.max_len)) {
            ++skipped;
            return false;
        }
        item = make_batch_item(std::move(src_ids), tgt_ids);
        return true;
    }

    std::vector<Batch> make_batches(const std::vector<TrainingExample>& examples,
                                    int batch_size) {
        std::vector<Batch> batches;
        Batch current;
        for (const auto& ex : examples) {
            BatchItem item;
            if (!encode_pair(ex, item)) continue;
            current.push_back(std::move(item));
            if (static_cast<int>(current.size()) == batch_size) {
                batches.push_back(std::move(current));
                current.clear();
            }
        }
        if (!current.empty()) batches.push_back(std::move(current));
        return batches;
    }
};

}  // namespace

void PipelineRunner::train_base() {
    require("filtered.tsv", "filter");
    require("vocab.json", "tokenize");
    StageIo io;
    io.inputs = {path("filtered.tsv"), path("vocab.json")};
    io.outputs = {path("base.ckpt"), path("base_loss.json")};
    run_stage("train_base", io, [this] {
        const ParallelCorpus corpus = load_parallel(path("filtered.tsv"), CorpusFormat::tsv);
        auto [bpe, vocab] = load_vocab(path("vocab.json"));

        ModelParams params = init_model(cfg_.model, vocab.size(), mix_seed(cfg_.seed, "init"));

        std::vector<TrainingExample> examples;
        examples.reserve(corpus.size());
        for (const auto& pair : corpus.pairs) {
            TrainingExample ex;
            ex.origin = ExampleOrigin::parallel;
            ex.input_text = pair.src;
            ex.target_text = pair.tgt;
            examples.push_back(std::move(ex));
        }

        std::map<std::string, std::vector<int>> cache;
        ExampleEncoder encoder{bpe, vocab, cfg_.model, false, &cache};
        TrainConfig train_cfg = cfg_.train_base;
        train_cfg.seed = mix_seed(cfg_.seed, "train_base");

        auto stream = [&](int epoch) {
            std::vector<TrainingExample> shuffled = examples;
            Rng rng(mix_seed(cfg_.seed, "base_epoch", static_cast<uint64_t>(epoch)));
            rng.shuffle(shuffled);
            return encoder.make_batches(shuffled, train_cfg.batch_size);
        };
        const TrainTrace trace = train(params, stream, train_cfg);
        if (encoder.skipped > 0)
            std::cerr << "warning: skipped " << encoder.skipped << " overlong base examples\n";

        save_checkpoint(params, vocab.hash(), path("base.ckpt"));
        json loss;
        loss["epoch_loss"] = trace.epoch_loss;
        loss["steps"] = trace.steps;
        write_file_atomic(path("base_loss.json"), loss.dump(2) + "\n");
    });
}

void PipelineRunner::finetune() {
    require("base.ckpt", "train-base");
    require("vocab.json", "tokenize");
    require("tasks_train.jsonl", "synthesize");
    require("filtered.tsv", "filter");
    StageIo io;
    io.inputs = {path("base.ckpt"), path("vocab.json"), path("tasks_train.jsonl"),
                 path("filtered.tsv")};
    io.outputs = {path("finetuned.ckpt"), path("vocab_finetuned.json"),
                  path("finetune_loss.json")};
    run_stage("finetune", io, [this] {
        const ParallelCorpus pool = load_parallel(path("filtered.tsv"), CorpusFormat::tsv);
        auto [bpe, vocab] = load_vocab(path("vocab.json"));
        Checkpoint base = load_checkpoint(path("base.ckpt"));
        if (base.vocab_hash != vocab.hash())
            throw PrereqError("base checkpoint was trained with a different vocabulary");

        const bool tags_enabled = !cfg_.mix.no_instruction_tokens;
        ModelParams params = base.params;
        if (tags_enabled) {
            expand_vocab(vocab, {kInstructionOpenTag, kInstructionCloseTag});
            params = expand_embeddings(params, 2, cfg_.pca_rank, mix_seed(cfg_.seed, "expand"));
        }
        save_vocab(bpe, vocab, path("vocab_finetuned.json"));

        const TaskDataset train_tasks = load_task_dataset(path("tasks_train.jsonl"));
        std::vector<TrainingExample> task_examples;
        task_examples.reserve(train_tasks.records.size());
        for (const auto& rec : train_tasks.records)
            task_examples.push_back(format_with_instruction(rec, tags_enabled));

        MixConfig mix_cfg = cfg_.mix;
        mix_cfg.seed = mix_seed(cfg_.seed, "mix");

        std::map<std::string, std::vector<int>> cache;
        ExampleEncoder encoder{bpe, vocab, cfg_.model, tags_enabled, &cache};
        TrainConfig train_cfg = cfg_.finetune;
        train_cfg.seed = mix_seed(cfg_.seed, "finetune");

        auto stream = [&](int epoch) {
            const std::vector<TrainingExample> mixed =
                mix_epoch(pool, task_examples, mix_cfg, epoch);
            if (cfg_.export_epochs)
                export_epoch_jsonl(mixed, path("mixed_epoch_" + std::to_string(epoch) + ".jsonl"));
            return encoder.make_batches(mixed, train_cfg.batch_size);
        };
        const TrainTrace trace = train(params, stream, train_cfg);
        if (encoder.skipped > 0)
            std::cerr << "warning: skipped " << encoder.skipped << " overlong mixed examples\n";

        save_checkpoint(params, vocab.hash(), path("finetuned.ckpt"));
        json loss;
        loss["epoch_loss"] = trace.epoch_loss;
        loss["steps"] = trace.steps;
        write_file_atomic(path("finetune_loss.json"), loss.dump(2) + "\n");
    });
}

namespace {

struct LoadedModel {
    BpeModel bpe;
    Vocab vocab;
    ModelParams params;
};

LoadedModel load_model(const std::string& ckpt_path, const std::string& vocab_path) {
    LoadedModel m;
    auto [bpe, vocab] = load_vocab(vocab_path);
    m.bpe = std::move(bpe);
    m.vocab = std::move(vocab);
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    if (ckpt.vocab_hash != m.vocab.hash())
        throw PrereqError("checkpoint " + ckpt_path + " does not match vocabulary " + vocab_path);
    m.params = std::move(ckpt.params);
    return m;
}

std::string decode_to_text(const LoadedModel& m, const std::vector<int>& src_ids) {
    const std::vector<int> out =
        greedy_decode(m.params, src_ids, m.params.hyper.max_len - 2);
    return decode(m.bpe, m.vocab, out);
}

}  // namespace

void PipelineRunner::evaluate() {
    require("finetuned.ckpt", "finetune");
    require("vocab_finetuned.json", "finetune");
    require("base.ckpt", "train-base");
    require("vocab.json", "tokenize");
    require("tasks_heldout.jsonl", "synthesize");
    if (cfg_.corpus.test_path.empty())
        throw ConfigError("corpus.test_path is required for evaluation");
    if (!fs::exists(cfg_.corpus.test_path))
        throw PrereqError("test corpus not found: " + cfg_.corpus.test_path);

    StageIo io;
    io.inputs = {path("finetuned.ckpt"), path("vocab_finetuned.json"), path("base.ckpt"),
                 path("vocab.json"), path("tasks_heldout.jsonl"), cfg_.corpus.test_path};
    io.outputs = {path("eval_report.json"), path("eval_report.txt"), path("sr_report.json"),
                  path("general_eval.json"), path("threshold_violations.json")};
    run_stage("evaluate", io, [this] {
        const LoadedModel ft = load_model(path("finetuned.ckpt"), path("vocab_finetuned.json"));
        const LoadedModel base = load_model(path("base.ckpt"), path("vocab.json"));
        const TaskDataset heldout = load_task_dataset(path("tasks_heldout.jsonl"));
        const bool tags_enabled = !cfg_.mix.no_instruction_tokens;

        Lexicon profanity;
        if (!cfg_.lexicons.profanity.empty())
            profanity = load_lexicon(cfg_.lexicons.profanity, LexiconKind::profanity);
        Lexicon antonym;
        if (!cfg_.lexicons.antonym.empty())
            antonym = load_lexicon(cfg_.lexicons.antonym, LexiconKind::antonym);

        // Decode every heldout record once per pass and reuse the outputs for
        // RR/ChrF rows and for the success-rate report.
        std::map<std::pair<std::string, int64_t>, std::pair<std::string, std::string>> outputs;
        for (const auto& rec : heldout.records) {
            const std::vector<int> general_ids = [&] {
                std::vector<int> ids = encode(ft.bpe, ft.vocab, rec.src);
                ids.push_back(Vocab::kEos);
                return ids;
            }();
            const TrainingExample ex = format_with_instruction(rec, tags_enabled);
            std::vector<int> instructed_ids =
                encode_example_input(ex, ft.bpe, ft.vocab, tags_enabled);
            instructed_ids.push_back(Vocab::kEos);
            outputs[{rec.task_name, rec.id}] = {decode_to_text(ft, general_ids),
                                                decode_to_text(ft, instructed_ids)};
        }

        const TaskDecodeFn decode_fn = [&outputs](const TaskRecord& rec, bool with_instruction) {
            const auto& [general, instructed] = outputs.at({rec.task_name, rec.id});
            return with_instruction ? instructed : general;
        };
        const std::vector<TaskEvalRow> rows = evaluate_tasks(decode_fn, heldout, cfg_.chrf);
        write_file_atomic(path("eval_report.json"), task_report_json(rows) + "\n");
        write_file_atomic(path("eval_report.txt"), render_task_report(rows));

        // Success rate per task over the same outputs (checkers defined for
        // native kinds only).
        json sr_report = json::object();
        std::map<std::string, std::vector<EvalTriple>> triples_by_task;
        std::map<std::string, TaskKind> kind_by_task;
        for (const auto& rec : heldout.records) {
            if (rec.kind == TaskKind::external) continue;
            const auto& [general, instructed] = outputs.at({rec.task_name, rec.id});
            triples_by_task[rec.task_name].push_back(
                {rec.src, instructed, general, rec.params});
            kind_by_task[rec.task_name] = rec.kind;
        }
        for (const auto& [task, triples] : triples_by_task) {
            const TaskKind kind = kind_by_task.at(task);
            const Lexicon* lex =
                lexicon_for_kind(kind, nullptr,
                                 cfg_.lexicons.antonym.empty() ? nullptr : &antonym,
                                 cfg_.lexicons.profanity.empty() ? nullptr : &profanity);
            sr_report[task] = success_rate(kind, triples, {}, lex);
        }
        write_file_atomic(path("sr_report.json"), sr_report.dump(2) + "\n");

        // general translation quality, base vs finetuned
        const CorpusFormat format =
            cfg_.corpus.format == "jsonl" ? CorpusFormat::jsonl : CorpusFormat::tsv;
        const ParallelCorpus test = load_parallel(cfg_.corpus.test_path, format);
        std::vector<std::string> base_hyps, ft_hyps, refs;
        for (const auto& pair : test.pairs) {
            std::vector<int> base_ids = encode(base.bpe, base.vocab, pair.src);
            base_ids.push_back(Vocab::kEos);
            std::vector<int> ft_ids = encode(ft.bpe, ft.vocab, pair.src);
            ft_ids.push_back(Vocab::kEos);
            base_hyps.push_back(decode_to_text(base, base_ids));
            ft_hyps.push_back(decode_to_text(ft, ft_ids));
            refs.push_back(pair.tgt);
        }
        json general;
        general["chrf_base"] = chrf_corpus(base_hyps, refs, cfg_.chrf);
        general["chrf_finetuned"] = chrf_corpus(ft_hyps, refs, cfg_.chrf);
        general["drop"] =
            general["chrf_base"].get<double>() - general["chrf_finetuned"].get<double>();
        write_file_atomic(path("general_eval.json"), general.dump(2) + "\n");

        // threshold checks (recorded, mapped to the exit code by the caller)
        json violations = json::array();
        auto row_for = [&rows](const std::string& task) -> const TaskEvalRow* {
            for (const auto& row : rows)
                if (row.task == task) return &row;
            return nullptr;
        };
        for (const auto& [task, min_sr] : cfg_.thresholds.sr_min) {
            if (!sr_report.contains(task)) {
                violations.push_back("no success rate measured for task " + task);
            } else if (sr_report[task].get<double>() < min_sr) {
                violations.push_back("task " + task + " SR " +
                                     std::to_string(sr_report[task].get<double>()) +
                                     " below threshold " + std::to_string(min_sr));
            }
        }
        for (const auto& [task, max_rr] : cfg_.thresholds.rr_max) {
            const TaskEvalRow* row = row_for(task);
            if (!row) {
                violations.push_back("no RR measured for task " + task);
            } else if (row->rr > max_rr) {
                violations.push_back("task " + task + " RR " + std::to_string(row->rr) +
                                     " above threshold " + std::to_string(max_rr));
            }
        }
        if (cfg_.thresholds.general_chrf_max_drop >= 0.0 &&
            general["drop"].get<double>() > cfg_.thresholds.general_chrf_max_drop)
            violations.push_back("general ChrF drop " +
                                 std::to_string(general["drop"].get<double>()) +
                                 " exceeds threshold " +
                                 std::to_string(cfg_.thresholds.general_chrf_max_drop));
        write_file_atomic(path("threshold_violations.json"), violations.dump(2) + "\n");
    });
}

void PipelineRunner::compose_eval() {
    require("finetuned.ckpt", "finetune");
    require("vocab_finetuned.json", "finetune");
    if (cfg_.corpus.test_path.empty())
        throw ConfigError("corpus.test_path is required for composition evaluation");
    StageIo io;
    io.inputs = {path("finetuned.ckpt"), path("vocab_finetuned.json"), cfg_.corpus.test_path};
    io.outputs = {path("compose_report.json"), path("compose_report.txt")};
    run_stage("compose_eval", io, [this] {
        const LoadedModel ft = load_model(path("finetuned.ckpt"), path("vocab_finetuned.json"));
        const bool tags_enabled = !cfg_.mix.no_instruction_tokens;

        const CorpusFormat format =
            cfg_.corpus.format == "jsonl" ? CorpusFormat::jsonl : CorpusFormat::tsv;
        const ParallelCorpus test = load_parallel(cfg_.corpus.test_path, format);
        TaskDataset testset;
        for (size_t i = 0; i < test.pairs.size() && i < cfg_.compose.items; ++i) {
            TaskRecord rec;
            rec.kind = TaskKind::empty_instruction;
            rec.task_name = "compose_item";
            rec.src = test.pairs[i].src;
            rec.tgt = test.pairs[i].tgt;
            rec.id = test.pairs[i].id;
            testset.add(std::move(rec));
        }

        Lexicon translation, antonym, profanity;
        std::map<TaskKind, CompositionTaskContext> contexts;
        std::vector<std::pair<TaskKind, TaskKind>> pairs;
        for (const auto& [a, b] : cfg_.compose.pairs) {
            const TaskKind t1 = task_kind_from_name(a);
            const TaskKind t2 = task_kind_from_name(b);
            pairs.emplace_back(t1, t2);
            for (TaskKind k : {t1, t2}) {
                CompositionTaskContext ctx;
                ctx.seed = mix_seed(cfg_.seed, "compose:" + task_kind_name(k));
                if (k == TaskKind::translate_x_to_y && !cfg_.lexicons.translation.empty()) {
                    translation = load_lexicon(cfg_.lexicons.translation, LexiconKind::translation);
                    ctx.lexicon = &translation;
                }
                if (k == TaskKind::add_antonyms && !cfg_.lexicons.antonym.empty()) {
                    antonym = load_lexicon(cfg_.lexicons.antonym, LexiconKind::antonym);
                    ctx.lexicon = &antonym;
                }
                if (k == TaskKind::remove_profanity && !cfg_.lexicons.profanity.empty()) {
                    profanity = load_lexicon(cfg_.lexicons.profanity, LexiconKind::profanity);
                    ctx.lexicon = &profanity;
                }
                contexts[k] = ctx;
            }
        }

        const ComposedDecodeFn decode_fn = [&](const TaskRecord& rec,
                                               const std::string* instruction) {
            std::vector<int> ids;
            if (instruction == nullptr) {
                ids = encode(ft.bpe, ft.vocab, rec.src);
            } else {
                TaskRecord prompt = rec;
                prompt.instruction = *instruction;
                const TrainingExample ex = format_with_instruction(prompt, tags_enabled);
                ids = encode_example_input(ex, ft.bpe, ft.vocab, tags_enabled);
            }
            ids.push_back(Vocab::kEos);
            return decode_to_text(ft, ids);
        };

        const std::vector<CompositionRow> rows = evaluate_composition(
            decode_fn, pairs, cfg_.compose.join_styles, testset, contexts, cfg_.chrf);
        write_file_atomic(path("compose_report.json"), composition_report_json(rows) + "\n");
        write_file_atomic(path("compose_report.txt"), render_composition_report(rows));
    });
}

void PipelineRunner::interpolate_stage() {
    require("base.ckpt", "train-base");
    require("finetuned.ckpt", "finetune");
    require("vocab_finetuned.json", "finetune");
    require("tasks_heldout.jsonl", "synthesize");
    if (cfg_.corpus.test_path.empty())
        throw ConfigError("corpus.test_path is required for interpolation");
    StageIo io;
    io.inputs = {path("base.ckpt"), path("finetuned.ckpt"), path("vocab_finetuned.json"),
                 path("tasks_heldout.jsonl"), cfg_.corpus.test_path};
    io.outputs = {path("interpolated.ckpt"), path("alpha_trace.json")};
    run_stage("interpolate", io, [this] {
        const LoadedModel ft = load_model(path("finetuned.ckpt"), path("vocab_finetuned.json"));
        const Checkpoint base = load_checkpoint(path("base.ckpt"));
        const TaskDataset heldout = load_task_dataset(path("tasks_heldout.jsonl"));
        const bool tags_enabled = !cfg_.mix.no_instruction_tokens;

        const CorpusFormat format =
            cfg_.corpus.format == "jsonl" ? CorpusFormat::jsonl : CorpusFormat::tsv;
        const ParallelCorpus test = load_parallel(cfg_.corpus.test_path, format);
        const size_t test_n = std::min(cfg_.interpolate.test_items, test.pairs.size());

        std::map<std::string, std::vector<const TaskRecord*>> by_task;
        for (const auto& rec : heldout.records)
            if (rec.kind != TaskKind::external) by_task[rec.task_name].push_back(&rec);

        const auto perf_fn = [&](const ModelParams& candidate) {
            LoadedModel m;
            m.bpe = ft.bpe;
            m.vocab = ft.vocab;
            m.params = candidate;
            std::vector<std::string> hyps, refs;
            for (size_t i = 0; i < test_n; ++i) {
                std::vector<int> ids = encode(m.bpe, m.vocab, test.pairs[i].src);
                ids.push_back(Vocab::kEos);
                hyps.push_back(decode_to_text(m, ids));
                refs.push_back(test.pairs[i].tgt);
            }
            const double general = chrf_corpus(hyps, refs, cfg_.chrf);

            double sr_sum = 0.0;
            size_t sr_tasks = 0;
            for (const auto& [task, records] : by_task) {
                std::vector<EvalTriple> triples;
                for (size_t i = 0; i < records.size() && i < cfg_.interpolate.sr_items_per_task;
                     ++i) {
                    const TaskRecord& rec = *records[i];
                    std::vector<int> general_ids = encode(m.bpe, m.vocab, rec.src);
                    general_ids.push_back(Vocab::kEos);
                    const TrainingExample ex = format_with_instruction(rec, tags_enabled);
                    std::vector<int> instructed_ids =
                        encode_example_input(ex, m.bpe, m.vocab, tags_enabled);
                    instructed_ids.push_back(Vocab::kEos);
                    triples.push_back({rec.src, decode_to_text(m, instructed_ids),
                                       decode_to_text(m, general_ids), rec.params});
                }
                if (triples.empty()) continue;
                try {
                    sr_sum += success_rate(records.front()->kind, triples, {}, nullptr);
                    ++sr_tasks;
                } catch (const std::runtime_error&) {
                    // checkers that need external context are skipped here
                }
            }
            const double task_score = sr_tasks ? sr_sum / static_cast<double>(sr_tasks) : 0.0;
            const double w = cfg_.interpolate.perf_weight;
            return w * general + (1.0 - w) * task_score;
        };

        const AlphaSearchResult result =
            search_alpha(base.params, ft.params, perf_fn, cfg_.interpolate.grid);
        const ModelParams blended = interpolate(base.params, ft.params, result.best_alpha);
        save_checkpoint(blended, ft.vocab.hash(), path("interpolated.ckpt"));
        json trace;
        trace["best_alpha"] = result.best_alpha;
        json points = json::array();
        for (const auto& [alpha, perf] : result.trace)
            points.push_back({{"alpha", alpha}, {"perf", perf}});
        trace["trace"] = points;
        write_file_atomic(path("alpha_trace.json"), trace.dump(2) + "\n");
    });
}

void PipelineRunner::decode_file(const std::string& input_path, const std::string& instruction,
                                 const std::string& checkpoint_name,
                                 const std::string& output_path) {
    std::string ckpt = checkpoint_name.empty() ? "finetuned" : checkpoint_name;
    std::string ckpt_file, vocab_file;
    if (ckpt == "base") {
        ckpt_file = path("base.ckpt");
        vocab_file = path("vocab.json");
        require("base.ckpt", "train-base");
    } else if (ckpt == "finetuned") {
        ckpt_file = path("finetuned.ckpt");
        vocab_file = path("vocab_finetuned.json");
        require("finetuned.ckpt", "finetune");
    } else if (ckpt == "interpolated") {
        ckpt_file = path("interpolated.ckpt");
        vocab_file = path("vocab_finetuned.json");
        require("interpolated.ckpt", "interpolate");
    } else {
        throw ConfigError("unknown checkpoint name: " + ckpt);
    }
    const LoadedModel m = load_model(ckpt_file, vocab_file);
    const bool tags_enabled = !cfg_.mix.no_instruction_tokens;

    std::ifstream in(input_path);
    if (!in) throw PrereqError("cannot open decode input: " + input_path);
    std::ofstream out(output_path);
    if (!out) throw std::runtime_error("cannot write decode output: " + output_path);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<int> ids;
        if (instruction.empty()) {
            ids = encode(m.bpe, m.vocab, line);
        } else {
            TaskRecord rec;
            rec.instruction = instruction;
            rec.src = line;
            const TrainingExample ex = format_with_instruction(rec, tags_enabled);
            ids = encode_example_input(ex, m.bpe, m.vocab, tags_enabled);
        }
        ids.push_back(Vocab::kEos);
        out << decode_to_text(m, ids) << '\n';
    }
}

void PipelineRunner::reproduce_toy() {
    cfg_.corpus.path = path("toy_train.tsv");
    cfg_.corpus.test_path = path("toy_test.tsv");
    synthesize_toy();
    filter();
    tokenize();
    synthesize();
    train_base();
    finetune();
    evaluate();
    compose_eval();
    if (cfg_.interpolate.enabled) interpolate_stage();
}


}  // namespace instructmt
