// Copyright 2026 The signpose Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. parse_args() turns argv into a Command; run()
// executes it. Exit codes: 0 success, 1 runtime failure, 2 usage error.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "signpose/dataset.hpp"
#include "signpose/train.hpp"

namespace signpose::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Options shared by train and ablate.
struct TrainFlags {
    std::string model = "bilstm";
    std::string norm = "com";
    int epochs = 60;
    std::size_t batch_size = 32;
    double lr = 1e-3;
    std::size_t seq_len = 64;
    std::uint64_t seed = 0;
    std::optional<double> dropout;
    std::optional<std::size_t> embed_dim, hidden_dim, d_model, heads, layers, ff_dim;
    bool augment = true;
    AugmentConfig aug;
    bool cosine = false;
    std::string config_file;
};

struct IngestCmd {
    std::string keypoints_dir;
    std::string out;
    std::string splits_file;
    std::string default_split = "train";
    bool skip_invalid = false;
};

struct DownsampleCmd {
    std::string manifest;
    std::size_t k = 100;
    std::string out;
};

struct TrainCmd {
    std::string manifest;
    std::string out;
    TrainFlags flags;
};

struct EvalCmd {
    std::string checkpoint;
    std::string manifest;
    std::string split = "val";
    std::string out;
};

struct AblateCmd {
    std::string manifest;
    std::string out;
    std::string axis;
    std::vector<std::string> values;
    TrainFlags flags;
};

struct StatsCmd {
    std::string manifest;
    std::string split = "train";
    std::string json_out;
    std::string histogram_out;
    bool table = false;
};

struct SynthCmd {
    std::string out;
    int classes = 10;
    int train_per_class = 30;
    int val_per_class = 10;
    int test_per_class = 10;
    int frames = 32;
    double translation = 0.3;
    double scale_lo = 0.5;
    double scale_hi = 1.5;
    std::uint64_t seed = 0;
};

using Command = std::variant<IngestCmd, DownsampleCmd, TrainCmd, EvalCmd, AblateCmd, StatsCmd, SynthCmd>;

struct ParseResult {
    std::optional<Command> command;  // empty for --help and usage errors
    int exit_code = kExitOk;
    std::string message;  // help text (exit 0) or diagnostic (exit 2)
};

namespace detail {

inline void add_train_flags(CLI::App& app, TrainFlags& f) {
    app.add_option("--model", f.model, "Temporal model")->check(CLI::IsMember({"lstm", "bilstm", "transformer"}))
        ->capture_default_str();
    app.add_option("--norm", f.norm, "Coordinate normalization")->check(CLI::IsMember({"raw", "nose", "face", "com"}))
        ->capture_default_str();
    app.add_option("--epochs", f.epochs, "Training epochs")->check(CLI::NonNegativeNumber)->capture_default_str();
    app.add_option("--batch-size", f.batch_size, "Mini-batch size")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--lr", f.lr, "Adam learning rate")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--seq-len", f.seq_len, "Frames per clip after resampling")->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--seed", f.seed, "Seed for initialization, shuffling, dropout, and augmentation")
        ->capture_default_str();
    app.add_option("--dropout", f.dropout, "Dropout rate (default: 0.2 for LSTMs, 0.1 for the transformer)")
        ->check(CLI::Range(0.0, 0.999999));
    app.add_option("--embed-dim", f.embed_dim, "LSTM frame embedding width (default 128)");
    app.add_option("--hidden-dim", f.hidden_dim, "LSTM hidden width (default 256)");
    app.add_option("--d-model", f.d_model, "Transformer width (default 256)");
    app.add_option("--heads", f.heads, "Transformer attention heads (default 4)");
    app.add_option("--layers", f.layers, "Transformer encoder layers (default 3)");
    app.add_option("--ff-dim", f.ff_dim, "Transformer feed-forward width (default 512)");
    app.add_flag("--augment,!--no-augment", f.augment, "Enable training-time augmentation (default on)");
    app.add_option("--augment-jitter-sigma", f.aug.jitter_sigma, "Gaussian jitter sigma")->capture_default_str();
    app.add_option("--augment-scale-lo", f.aug.scale_lo, "Lower skeleton scale factor")->capture_default_str();
    app.add_option("--augment-scale-hi", f.aug.scale_hi, "Upper skeleton scale factor")->capture_default_str();
    app.add_option("--augment-temporal-dropout-rate", f.aug.temporal_dropout_rate, "Probability of blanking a frame")
        ->capture_default_str();
    app.add_option("--augment-seed", f.aug.seed, "Extra key mixed into the augmentation stream")->capture_default_str();
    app.add_flag("--cosine", f.cosine, "Cosine learning-rate decay to zero over the run");
    app.add_option("--config", f.config_file,
                   "key=value file; keys are flag names without dashes (e.g. epochs=20, augment.scale_lo=0.9). "
                   "Command-line flags override it");
}

/// Reads a key=value config file into "--key=value" tokens. '#' starts a
/// comment; '.' and '_' in keys map to '-'.
inline std::vector<std::string> config_tokens(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw CLI::ValidationError("--config", "cannot read config file '" + path + "'");
    std::vector<std::string> tokens;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(f, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--config", path + ":" + std::to_string(lineno) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        for (auto& c : key)
            if (c == '.' || c == '_') c = '-';
        if (key.empty() || key == "config")
            throw CLI::ValidationError("--config", path + ":" + std::to_string(lineno) + ": invalid key");
        tokens.push_back("--" + key + "=" + value);
    }
    return tokens;
}

/// Inserts config-file tokens directly after the subcommand name so that
/// explicit flags, which come later, take precedence.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
    for (std::size_t i = 1; i < args.size(); ++i) {
        std::string path;
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
        else continue;
        auto tokens = config_tokens(path);
        args.insert(args.begin() + 1, tokens.begin(), tokens.end());
        break;
    }
    return args;
}

inline TrainConfig build_train_config(const TrainFlags& f) {
    TrainConfig cfg;
    if (f.model == "transformer") {
        PoseTransformerConfig c;
        if (f.d_model) c.d_model = *f.d_model;
        if (f.heads) c.n_heads = *f.heads;
        if (f.layers) c.n_layers = *f.layers;
        if (f.ff_dim) c.ff_dim = *f.ff_dim;
        if (f.dropout) c.dropout_rate = *f.dropout;
        cfg.model = c;
    } else {
        PoseLstmConfig c;
        c.bidirectional = f.model == "bilstm";
        if (f.embed_dim) c.embed_dim = *f.embed_dim;
        if (f.hidden_dim) c.hidden_dim = *f.hidden_dim;
        if (f.dropout) c.dropout_rate = *f.dropout;
        cfg.model = c;
    }
    cfg.normalization = *parse_normalization(f.norm);
    cfg.augment = f.augment ? std::optional(f.aug) : std::nullopt;
    cfg.epochs = f.epochs;
    cfg.batch_size = f.batch_size;
    cfg.lr = f.lr;
    cfg.seq_len = f.seq_len;
    cfg.seed = f.seed;
    cfg.cosine_decay = f.cosine;
    return cfg;
}

}  // namespace detail

/// `args` excludes the program name.
inline ParseResult parse_args(std::vector<std::string> args) {
    CLI::App app{"Pose-keypoint isolated sign recognition toolkit", "signpose"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    IngestCmd ingest;
    auto* s_ingest = app.add_subcommand("ingest", "Validate extractor output and write a manifest");
    s_ingest->add_option("--keypoints", ingest.keypoints_dir, "Directory of .pose.json files")->required();
    s_ingest->add_option("--out", ingest.out, "Manifest CSV to write")->required();
    s_ingest->add_option("--splits", ingest.splits_file, "CSV with columns video_id,split");
    s_ingest->add_option("--default-split", ingest.default_split, "Split for videos not in --splits")
        ->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
    s_ingest->add_flag("--skip-invalid", ingest.skip_invalid, "Leave out unreadable files instead of failing");

    DownsampleCmd down;
    auto* s_down = app.add_subcommand("downsample", "Keep the k most frequent train glosses (variants skipped)");
    s_down->add_option("--manifest", down.manifest, "Input manifest CSV")->required();
    s_down->add_option("--k", down.k, "Number of glosses to keep")->check(CLI::PositiveNumber)->capture_default_str();
    s_down->add_option("--out", down.out, "Output manifest CSV")->required();

    TrainCmd tr;
    auto* s_train = app.add_subcommand("train", "Train a classifier; writes best.ckpt and metrics.jsonl");
    s_train->add_option("--manifest", tr.manifest, "Manifest CSV")->required();
    s_train->add_option("--out", tr.out, "Output directory")->required();
    detail::add_train_flags(*s_train, tr.flags);

    EvalCmd ev;
    auto* s_eval = app.add_subcommand("eval", "Score a checkpoint on one split");
    s_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
    s_eval->add_option("--manifest", ev.manifest, "Manifest CSV")->required();
    s_eval->add_option("--split", ev.split, "Split to score")->check(CLI::IsMember({"train", "val", "test"}))
        ->capture_default_str();
    s_eval->add_option("--out", ev.out, "Also write the metrics JSON here");

    AblateCmd ab;
    auto* s_ab = app.add_subcommand("ablate", "Train once per value of one axis and tabulate val accuracy");
    s_ab->add_option("--manifest", ab.manifest, "Manifest CSV")->required();
    s_ab->add_option("--out", ab.out, "Output directory")->required();
    s_ab->add_option("--axis", ab.axis, "Axis to vary")->required()->check(CLI::IsMember({"norm", "temporal", "dropout"}));
    s_ab->add_option("--values", ab.values,
                     "Comma-separated values (default: raw,nose,face,com | lstm,bilstm,transformer | 0,0.1,0.2,0.3)")
        ->delimiter(',')->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    detail::add_train_flags(*s_ab, ab.flags);

    StatsCmd st;
    auto* s_stats = app.add_subcommand("stats", "Per-gloss instance statistics of one split");
    s_stats->add_option("--manifest", st.manifest, "Manifest CSV")->required();
    s_stats->add_option("--split", st.split, "Split to summarize")->check(CLI::IsMember({"train", "val", "test"}))
        ->capture_default_str();
    s_stats->add_option("--json", st.json_out, "Also write the JSON summary here");
    s_stats->add_option("--histogram", st.histogram_out, "Write instances-per-gloss histogram CSV here");
    s_stats->add_flag("--table", st.table, "Print a text table instead of JSON");

    SynthCmd sy;
    auto* s_synth = app.add_subcommand("synth", "Generate a synthetic keypoint dataset with a manifest");
    s_synth->add_option("--out", sy.out, "Output directory")->required();
    s_synth->add_option("--classes", sy.classes, "Number of glosses")->check(CLI::PositiveNumber)->capture_default_str();
    s_synth->add_option("--train-per-class", sy.train_per_class, "Train clips per gloss")
        ->check(CLI::NonNegativeNumber)->capture_default_str();
    s_synth->add_option("--val-per-class", sy.val_per_class, "Val clips per gloss")->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    s_synth->add_option("--test-per-class", sy.test_per_class, "Test clips per gloss")->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    s_synth->add_option("--frames", sy.frames, "Frames per clip")->check(CLI::PositiveNumber)->capture_default_str();
    s_synth->add_option("--translation", sy.translation, "Maximum global translation")->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    s_synth->add_option("--scale-lo", sy.scale_lo, "Lower global scale")->check(CLI::PositiveNumber)->capture_default_str();
    s_synth->add_option("--scale-hi", sy.scale_hi, "Upper global scale")->check(CLI::PositiveNumber)->capture_default_str();
    s_synth->add_option("--seed", sy.seed, "Generator seed")->capture_default_str();

    ParseResult result;
    std::ostringstream out, err;
    try {
        args = detail::expand_config(std::move(args));
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        result.exit_code = app.exit(e, out, err);
        result.message = out.str() + err.str();
        if (result.exit_code != kExitOk) result.exit_code = kExitUsage;
        return result;
    }

    if (s_ingest->parsed()) result.command = ingest;
    else if (s_down->parsed()) result.command = down;
    else if (s_train->parsed()) result.command = tr;
    else if (s_eval->parsed()) result.command = ev;
    else if (s_ab->parsed()) {
        if (ab.values.empty()) ab.values = default_ablation_values(*parse_ablation_axis(ab.axis));
        result.command = ab;
    } else if (s_stats->parsed()) result.command = st;
    else if (s_synth->parsed()) {
        if (sy.scale_lo > sy.scale_hi) {
            result.exit_code = kExitUsage;
            result.message = "synth: --scale-lo must not exceed --scale-hi\n";
            return result;
        }
        result.command = sy;
    }
    return result;
}

// ---------------------------------------------------------------------------

namespace detail {

namespace fs = std::filesystem;

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << text;
    if (!f) throw std::runtime_error("failed writing '" + path.string() + "'");
}

inline std::string split_summary(const Manifest& m) {
    return "train " + std::to_string(m.count(Split::Train)) + ", val " + std::to_string(m.count(Split::Val)) +
           ", test " + std::to_string(m.count(Split::Test));
}

inline int run_cmd(const IngestCmd& c, std::ostream& out, std::ostream& err) {
    std::map<std::string, Split> split_of;
    if (!c.splits_file.empty()) {
        std::ifstream f(c.splits_file);
        if (!f) throw std::runtime_error("cannot read splits file '" + c.splits_file + "'");
        std::ostringstream ss;
        ss << f.rdbuf();
        const auto records = signpose::detail::split_csv(ss.str());
        for (std::size_t r = 0; r < records.size(); ++r) {
            const auto& fields = records[r].second;
            if (r == 0 && fields.size() >= 2 && fields[0] == "video_id") continue;
            if (fields.size() == 1 && fields[0].empty()) continue;
            const auto s = fields.size() == 2 ? parse_split(fields[1]) : std::nullopt;
            if (!s) throw std::runtime_error(c.splits_file + ":" + std::to_string(records[r].first) +
                                             ": expected video_id,split with split in train|val|test");
            split_of[fields[0]] = *s;
        }
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(c.keypoints_dir)) {
        const auto name = e.path().filename().string();
        if (e.is_regular_file() && name.size() > 10 && name.ends_with(".pose.json")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    Manifest m;
    const fs::path out_dir = fs::absolute(fs::path(c.out)).parent_path();
    m.base_dir = out_dir;
    std::size_t bad = 0;
    for (const auto& p : files) {
        PoseSequence seq;
        try {
            seq = read_keypoint_file(p);
        } catch (const std::exception& e) {
            err << "invalid keypoint file: " << e.what() << "\n";
            ++bad;
            continue;
        }
        ManifestEntry e{seq.video_id, seq.gloss, seq.signer_id, *parse_split(c.default_split),
                        fs::absolute(p).lexically_normal().lexically_relative(out_dir).generic_string()};
        if (auto it = split_of.find(seq.video_id); it != split_of.end()) e.split = it->second;
        for (const auto& prev : m.entries)
            if (prev.video_id == e.video_id)
                throw std::runtime_error("video_id '" + e.video_id + "' appears in more than one file");
        m.entries.push_back(std::move(e));
    }
    if (bad && !c.skip_invalid) {
        err << bad << " invalid file(s); nothing written (use --skip-invalid to leave them out)\n";
        return kExitFailure;
    }
    if (m.entries.empty()) throw std::runtime_error("no .pose.json files found in '" + c.keypoints_dir + "'");
    write_text(c.out, write_manifest(m));
    out << "wrote " << c.out << ": " << m.entries.size() << " videos (" << split_summary(m) << ")";
    if (bad) out << ", skipped " << bad << " invalid";
    out << "\n";
    return kExitOk;
}

inline int run_cmd(const DownsampleCmd& c, std::ostream& out, std::ostream&) {
    const Manifest m = load_manifest_file(c.manifest);
    const auto glosses = top_k_glosses(m, c.k);
    const fs::path out_dir = fs::absolute(fs::path(c.out)).parent_path();
    const Manifest d = rebase_manifest(downsample(m, glosses), out_dir);
    write_text(c.out, write_manifest(d));
    out << "kept " << glosses.size() << " glosses: " << split_summary(d) << "\n";
    return kExitOk;
}

inline void print_epoch(std::ostream& out, const EpochMetrics& t, const EpochMetrics& v) {
    out << std::fixed << std::setprecision(4) << "epoch " << t.epoch << "  train loss " << t.loss << " top1 " << t.top1
        << "  val loss " << v.loss << " top1 " << v.top1 << " top5 " << v.top5 << std::endl;
    out.unsetf(std::ios::floatfield);
}

inline int run_cmd(const TrainCmd& c, std::ostream& out, std::ostream&) {
    TrainConfig cfg = build_train_config(c.flags);
    cfg.checkpoint_dir = c.out;
    const Manifest m = load_manifest_file(c.manifest);
    const auto result = train(m, cfg, [&](const EpochMetrics& t, const EpochMetrics& v) { print_epoch(out, t, v); });
    const fs::path ck = fs::path(c.out) / "best.ckpt";
    out << "best val top1 " << (result.history.empty() ? 0.0 : best_val(result.history)->top1) << " at epoch "
        << result.best.epoch << "; checkpoint " << ck.string() << "\n";
    return kExitOk;
}

inline int run_cmd(const EvalCmd& c, std::ostream& out, std::ostream&) {
    if (!fs::exists(c.checkpoint)) throw std::runtime_error("checkpoint '" + c.checkpoint + "' does not exist");
    const Checkpoint ck = load_checkpoint(c.checkpoint);
    const Manifest m = load_manifest_file(c.manifest);
    const EpochMetrics r = evaluate(ck, m, *parse_split(c.split));
    const auto text = to_json(r).dump() + "\n";
    if (!c.out.empty()) write_text(c.out, text);
    out << text;
    return kExitOk;
}

inline int run_cmd(const AblateCmd& c, std::ostream& out, std::ostream&) {
    TrainConfig base = build_train_config(c.flags);
    base.checkpoint_dir = c.out;
    const auto axis = *parse_ablation_axis(c.axis);
    for (const auto& v : c.values) (void)ablation_config(base, axis, v);  // reject bad values before training
    const Dataset data = load_dataset(load_manifest_file(c.manifest));
    const auto report = run_ablation(data, base, axis, c.values, [&](const AblationRow& r) {
        out << c.axis << "=" << r.value << ": val top1 " << r.best.top1 << " top5 " << r.best.top5 << std::endl;
    });
    const fs::path dir(c.out);
    write_text(dir / ("ablation_" + c.axis + ".csv"), report.csv());
    write_text(dir / ("ablation_" + c.axis + ".txt"), report.table());
    out << report.table();
    return kExitOk;
}

inline int run_cmd(const StatsCmd& c, std::ostream& out, std::ostream&) {
    const Manifest m = load_manifest_file(c.manifest);
    const GlossStats s = gloss_stats(m, *parse_split(c.split));
    const auto json = to_json(s).dump(2) + "\n";
    if (!c.json_out.empty()) write_text(c.json_out, json);
    if (!c.histogram_out.empty()) write_text(c.histogram_out, histogram_csv(s));
    out << (c.table ? stats_table(s) : json);
    return kExitOk;
}

inline int run_cmd(const SynthCmd& c, std::ostream& out, std::ostream&) {
    SynthSpec spec;
    spec.n_classes = c.classes;
    spec.seqs_per_class = c.train_per_class + c.val_per_class + c.test_per_class;
    spec.frames = c.frames;
    spec.nuisance_translation = c.translation;
    spec.nuisance_scale_range = {c.scale_lo, c.scale_hi};
    spec.seed = c.seed;
    spec.check();
    const fs::path dir(c.out);
    fs::create_directories(dir / "keypoints");
    Manifest m;
    for (int cls = 0; cls < c.classes; ++cls)
        for (int i = 0; i < spec.seqs_per_class; ++i) {
            const auto seq = synth_gloss_sequence(spec, cls, i);
            const Split split = i < c.train_per_class                     ? Split::Train
                                : i < c.train_per_class + c.val_per_class ? Split::Val
                                                                          : Split::Test;
            const std::string rel = "keypoints/" + seq.video_id + ".pose.json";
            write_text(dir / rel, write_keypoint_file(seq));
            m.entries.push_back({seq.video_id, seq.gloss, seq.signer_id, split, rel});
        }
    write_text(dir / "manifest.csv", write_manifest(m));
    out << "wrote " << m.entries.size() << " clips and " << (dir / "manifest.csv").string() << " (" << split_summary(m)
        << ")\n";
    return kExitOk;
}

}  // namespace detail

inline int run(const Command& cmd, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    try {
        return std::visit([&](const auto& c) { return detail::run_cmd(c, out, err); }, cmd);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

inline int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    const ParseResult p = parse_args(std::move(args));
    if (!p.command) {
        (p.exit_code == kExitOk ? std::cout : std::cerr) << p.message;
        return p.exit_code;
    }
    return run(*p.command);
}

}  // namespace signpose::cli
