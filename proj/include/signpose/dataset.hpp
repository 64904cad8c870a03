// Copyright 2026 The signpose Authors
// SPDX-License-Identifier: Apache-2.0
//
// Manifest handling, frequency-based gloss selection, and gloss statistics.

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "signpose/error.hpp"

namespace signpose {

enum class Split { Train, Val, Test };

inline constexpr std::string_view to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

inline std::optional<Split> parse_split(std::string_view s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    return std::nullopt;
}

struct ManifestEntry {
    std::string video_id;
    std::string gloss;
    std::string signer_id;
    Split split = Split::Train;
    std::string keypoint_path;  // relative paths resolve against Manifest::base_dir

    bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
    std::vector<ManifestEntry> entries;
    std::filesystem::path base_dir;

    std::filesystem::path resolve(const ManifestEntry& e) const {
        std::filesystem::path p(e.keypoint_path);
        return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    }

    std::size_t count(Split s) const {
        return static_cast<std::size_t>(
            std::count_if(entries.begin(), entries.end(), [&](const auto& e) { return e.split == s; }));
    }
};

inline constexpr std::array<std::string_view, 5> kManifestColumns{"video_id", "gloss", "signer_id", "split",
                                                                  "keypoint_path"};

namespace detail {

/// RFC 4180 record splitting: quoted fields may hold commas, doubled quotes,
/// and newlines. Returns records of raw field strings plus the 1-based line
/// each record starts on.
inline std::vector<std::pair<std::size_t, std::vector<std::string>>> split_csv(std::string_view text) {
    std::vector<std::pair<std::size_t, std::vector<std::string>>> records;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false, any = false;
    std::size_t line = 1, start_line = 1;
    auto end_record = [&] {
        if (any || !field.empty() || !fields.empty()) {
            fields.push_back(std::move(field));
            records.emplace_back(start_line, std::move(fields));
        }
        fields.clear();
        field.clear();
        any = false;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_record();
            ++line;
            start_line = line;
        } else {
            field += c;
        }
    }
    if (quoted) throw ManifestError("manifest: unterminated quoted field starting on line " + std::to_string(start_line));
    end_record();
    return records;
}

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace detail

/// Parses a manifest CSV. The header must name the five manifest columns
/// (any order; extra columns are ignored).
inline Manifest load_manifest(std::string_view csv, std::filesystem::path base_dir = {}) {
    const auto records = detail::split_csv(csv);
    if (records.empty()) throw ManifestError("manifest: empty file");
    const auto& header = records.front().second;
    std::array<std::size_t, 5> col{};
    for (std::size_t k = 0; k < kManifestColumns.size(); ++k) {
        auto it = std::find(header.begin(), header.end(), kManifestColumns[k]);
        if (it == header.end()) throw ManifestError("manifest: missing column '" + std::string(kManifestColumns[k]) + "'");
        col[k] = static_cast<std::size_t>(it - header.begin());
    }
    Manifest m;
    m.base_dir = std::move(base_dir);
    std::unordered_set<std::string> seen;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& [line, f] = records[r];
        if (f.size() == 1 && f[0].empty()) continue;  // blank line
        if (f.size() != header.size())
            throw ManifestError("manifest line " + std::to_string(line) + ": expected " +
                                std::to_string(header.size()) + " fields, found " + std::to_string(f.size()));
        ManifestEntry e;
        e.video_id = f[col[0]];
        e.gloss = f[col[1]];
        e.signer_id = f[col[2]];
        const auto split = parse_split(f[col[3]]);
        if (!split) throw ManifestError("manifest line " + std::to_string(line) + ": unknown split '" + f[col[3]] + "'");
        e.split = *split;
        e.keypoint_path = f[col[4]];
        if (e.video_id.empty()) throw ManifestError("manifest line " + std::to_string(line) + ": empty video_id");
        if (e.gloss.empty()) throw ManifestError("manifest line " + std::to_string(line) + ": empty gloss");
        if (!seen.insert(e.video_id).second)
            throw ManifestError("manifest line " + std::to_string(line) + ": duplicate video_id '" + e.video_id + "'");
        m.entries.push_back(std::move(e));
    }
    return m;
}

inline Manifest load_manifest_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ManifestError("cannot open manifest '" + path.string() + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return load_manifest(ss.str(), path.parent_path());
}

inline std::string write_manifest(const Manifest& m) {
    std::string out = "video_id,gloss,signer_id,split,keypoint_path\n";
    for (const auto& e : m.entries) {
        out += detail::csv_field(e.video_id) + "," + detail::csv_field(e.gloss) + "," +
               detail::csv_field(e.signer_id) + "," + std::string(to_string(e.split)) + "," +
               detail::csv_field(e.keypoint_path) + "\n";
    }
    return out;
}

/// Rewrites relative keypoint paths so they resolve from `new_base`.
inline Manifest rebase_manifest(Manifest m, const std::filesystem::path& new_base) {
    namespace fs = std::filesystem;
    const fs::path target = fs::absolute(new_base).lexically_normal();
    for (auto& e : m.entries) {
        fs::path p(e.keypoint_path);
        if (p.is_absolute()) continue;
        const fs::path abs = fs::absolute(m.base_dir / p).lexically_normal();
        e.keypoint_path = abs.lexically_relative(target).generic_string();
    }
    m.base_dir = new_base;
    return m;
}

// ---------------------------------------------------------------------------
// Gloss selection

/// Strips a maximal trailing run of decimal digits ("DOG1" -> "DOG"). A name
/// made only of digits is returned unchanged.
inline std::string base_gloss(std::string_view name) {
    std::size_t end = name.size();
    while (end > 0 && std::isdigit(static_cast<unsigned char>(name[end - 1]))) --end;
    if (end == 0) return std::string(name);
    return std::string(name.substr(0, end));
}

using BaseRule = std::function<std::string(std::string_view)>;

inline std::map<std::string, std::size_t> gloss_counts(const Manifest& m, Split split) {
    std::map<std::string, std::size_t> counts;
    for (const auto& e : m.entries)
        if (e.split == split) ++counts[e.gloss];
    return counts;
}

/// The k most frequent train-split glosses: ordered by (count desc, name asc),
/// skipping any gloss whose base name was already taken.
inline std::vector<std::string> top_k_glosses(const Manifest& m, std::size_t k, const BaseRule& rule = base_gloss) {
    if (k == 0) throw std::invalid_argument("top_k_glosses: k must be >= 1");
    const auto counts = gloss_counts(m, Split::Train);
    std::vector<std::pair<std::string, std::size_t>> order(counts.begin(), counts.end());
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> picked;
    std::set<std::string> bases;
    for (const auto& [gloss, n] : order) {
        if (!bases.insert(rule(gloss)).second) continue;
        picked.push_back(gloss);
        if (picked.size() == k) return picked;
    }
    throw ManifestError("top_k_glosses: asked for " + std::to_string(k) + " glosses but only " +
                        std::to_string(picked.size()) + " distinct base glosses exist in the train split");
}

/// Entries (all splits, original order) whose gloss is in `glosses`.
inline Manifest downsample(const Manifest& m, const std::vector<std::string>& glosses) {
    if (glosses.empty()) throw std::invalid_argument("downsample: gloss list is empty");
    const std::set<std::string> keep(glosses.begin(), glosses.end());
    Manifest out;
    out.base_dir = m.base_dir;
    for (const auto& e : m.entries)
        if (keep.count(e.gloss)) out.entries.push_back(e);
    return out;
}

// ---------------------------------------------------------------------------
// Statistics

struct GlossStats {
    Split split = Split::Train;
    std::size_t n_entries = 0;
    std::map<std::string, std::size_t> counts;
    double mean = 0.0;
    std::size_t median = 0;  // lower middle for an even number of glosses
    double std_population = 0.0;
    double std_sample = 0.0;  // 0 when there is a single gloss
    std::pair<std::string, std::size_t> min_gloss, max_gloss;
    std::map<std::size_t, std::size_t> histogram;  // instances per gloss -> number of glosses
};

inline GlossStats gloss_stats(const Manifest& m, Split split) {
    GlossStats s;
    s.split = split;
    s.counts = gloss_counts(m, split);
    if (s.counts.empty()) throw ManifestError("gloss_stats: split '" + std::string(to_string(split)) + "' is empty");
    std::vector<std::size_t> values;
    for (const auto& [g, n] : s.counts) {
        values.push_back(n);
        s.n_entries += n;
        ++s.histogram[n];
    }
    const double k = static_cast<double>(values.size());
    s.mean = static_cast<double>(s.n_entries) / k;
    double ss = 0.0;
    for (auto v : values) ss += (static_cast<double>(v) - s.mean) * (static_cast<double>(v) - s.mean);
    s.std_population = std::sqrt(ss / k);
    s.std_sample = values.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
    std::sort(values.begin(), values.end());
    s.median = values[(values.size() - 1) / 2];
    // counts is name-ordered, so the first strict improvement wins ties alphabetically
    s.min_gloss = *s.counts.begin();
    s.max_gloss = *s.counts.begin();
    for (const auto& p : s.counts) {
        if (p.second < s.min_gloss.second) s.min_gloss = p;
        if (p.second > s.max_gloss.second) s.max_gloss = p;
    }
    return s;
}

inline nlohmann::json to_json(const GlossStats& s) {
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& [count, freq] : s.histogram) hist.push_back({{"instances", count}, {"glosses", freq}});
    return {{"split", std::string(to_string(s.split))},
            {"entries", s.n_entries},
            {"glosses", s.counts.size()},
            {"mean", s.mean},
            {"median", s.median},
            {"std", s.std_population},
            {"std_sample", s.std_sample},
            {"min", {{"gloss", s.min_gloss.first}, {"count", s.min_gloss.second}}},
            {"max", {{"gloss", s.max_gloss.first}, {"count", s.max_gloss.second}}},
            {"histogram", hist}};
}

inline std::string stats_table(const GlossStats& s) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "split        " << to_string(s.split) << "\n"
       << "entries      " << s.n_entries << "\n"
       << "glosses      " << s.counts.size() << "\n"
       << "mean         " << s.mean << "\n"
       << "median       " << s.median << "\n"
       << "std (pop)    " << s.std_population << "\n"
       << "std (sample) " << s.std_sample << "\n"
       << "min          " << s.min_gloss.first << " (" << s.min_gloss.second << ")\n"
       << "max          " << s.max_gloss.first << " (" << s.max_gloss.second << ")\n";
    return os.str();
}

/// Histogram as CSV: instances,glosses
inline std::string histogram_csv(const GlossStats& s) {
    std::string out = "instances,glosses\n";
    for (const auto& [count, freq] : s.histogram) out += std::to_string(count) + "," + std::to_string(freq) + "\n";
    return out;
}

}  // namespace signpose
