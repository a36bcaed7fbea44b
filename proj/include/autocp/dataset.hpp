#pragma once

#include "autocp/common.hpp"
#include "autocp/rng.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace autocp {

// A loaded regression table. Immutable after construction; normalize()
// returns a fresh copy rather than mutating in place.
struct Dataset {
    Matrix features;                         // n x d
    Vector labels;                           // n
    std::vector<std::string> feature_names;  // d
    std::string label_name;
    double label_scale = 1.0;  // mean absolute label on the fit split, applied at the last normalize()

    Index n() const { return features.rows(); }
    Index d() const { return features.cols(); }
};

// One train/test partition of row indices 0..n-1.
struct SplitPlan {
    std::uint64_t seed = 0;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
};

namespace csv_detail {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// RFC-4180-style reader: comma separated, double quotes for escaping, CRLF
// or LF records, quoted fields may contain commas, quotes and newlines.
inline Table read_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    Table table;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool any_field = false;

    auto end_field = [&] {
        record.push_back(field);
        field.clear();
        any_field = true;
    };
    auto end_record = [&] {
        if (!any_field && record.empty()) return;  // skip blank lines
        end_field();
        if (table.header.empty())
            table.header = record;
        else
            table.rows.push_back(record);
        record.clear();
        any_field = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            in_quotes = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            if (!field.empty() || any_field || !record.empty()) end_record();
        } else if (c == '\r') {
            // consumed as part of CRLF; lone \r treated as record end
            if (i + 1 < text.size() && text[i + 1] == '\n') continue;
            if (!field.empty() || any_field || !record.empty()) end_record();
        } else {
            field += c;
        }
    }
    if (!field.empty() || any_field || !record.empty()) end_record();
    if (in_quotes) throw DataError("unterminated quoted field in " + path);
    if (table.header.empty()) throw DataError("empty CSV file: " + path);
    return table;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

// Parses a full numeric cell; '.' decimal separator only.
inline bool parse_number(const std::string& cell, double* out) {
    std::string t = trim(cell);
    if (t.empty()) return false;
    const char* begin = t.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end != begin + t.size()) return false;
    *out = v;
    return true;
}

}  // namespace csv_detail

// Loads a header-first CSV. `target` selects the label column by name; empty
// means the last column. Rows containing empty cells are dropped (the count
// is logged and optionally reported); non-numeric non-empty cells are a hard
// error naming the offending row and column.
inline Dataset load_csv(const std::string& path, const std::string& target = "",
                        std::size_t* n_dropped = nullptr) {
    csv_detail::Table table = csv_detail::read_table(path);
    const std::size_t n_cols = table.header.size();
    if (n_cols < 2) throw DataError("need at least one feature column and one target column: " + path);

    std::size_t target_col = n_cols - 1;
    if (!target.empty()) {
        bool found = false;
        for (std::size_t c = 0; c < n_cols; ++c) {
            if (csv_detail::trim(table.header[c]) == target) {
                target_col = c;
                found = true;
                break;
            }
        }
        if (!found) throw DataError("target column '" + target + "' not found in " + path);
    }

    std::vector<std::vector<double>> feat_rows;
    std::vector<double> labels;
    std::size_t dropped = 0;

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != n_cols) {
            throw DataError("row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                            " fields, expected " + std::to_string(n_cols) + " in " + path);
        }
        bool missing = false;
        for (std::size_t c = 0; c < n_cols; ++c) {
            if (csv_detail::trim(row[c]).empty()) {
                missing = true;
                break;
            }
        }
        if (missing) {
            ++dropped;
            continue;
        }
        std::vector<double> feats;
        feats.reserve(n_cols - 1);
        double label = 0.0;
        for (std::size_t c = 0; c < n_cols; ++c) {
            double v = 0.0;
            if (!csv_detail::parse_number(row[c], &v)) {
                throw DataError("non-numeric value '" + csv_detail::trim(row[c]) + "' at row " +
                                std::to_string(r + 1) + ", column '" + table.header[c] + "' in " + path);
            }
            if (c == target_col)
                label = v;
            else
                feats.push_back(v);
        }
        feat_rows.push_back(std::move(feats));
        labels.push_back(label);
    }

    if (dropped > 0) std::clog << "autocp: dropped " << dropped << " rows with missing cells from " << path << "\n";
    if (n_dropped) *n_dropped = dropped;
    if (feat_rows.size() < 2) throw DataError("fewer than 2 complete rows in " + path);

    Dataset ds;
    ds.features.resize(static_cast<Index>(feat_rows.size()), static_cast<Index>(n_cols - 1));
    ds.labels.resize(static_cast<Index>(labels.size()));
    for (std::size_t r = 0; r < feat_rows.size(); ++r) {
        for (std::size_t c = 0; c < n_cols - 1; ++c) ds.features(static_cast<Index>(r), static_cast<Index>(c)) = feat_rows[r][c];
        ds.labels[static_cast<Index>(r)] = labels[r];
    }
    for (std::size_t c = 0; c < n_cols; ++c) {
        if (c == target_col) continue;
        ds.feature_names.push_back(csv_detail::trim(table.header[c]));
    }
    ds.label_name = csv_detail::trim(table.header[target_col]);
    ds.label_scale = 1.0;
    return ds;
}

// Standardizes feature columns and rescales labels by the mean absolute
// label, with all statistics computed on the `fit_on` rows only. Constant
// feature columns become all-zero (scale 1). Throws if the labels are all
// zero on `fit_on`.
inline Dataset normalize(const Dataset& ds, const std::vector<std::size_t>& fit_on) {
    require(!fit_on.empty(), "normalize: fit_on must be non-empty");
    for (std::size_t i : fit_on) require(i < static_cast<std::size_t>(ds.n()), "normalize: fit_on index out of range");

    const auto k = static_cast<double>(fit_on.size());
    Dataset out = ds;

    for (Index c = 0; c < ds.d(); ++c) {
        double m = 0.0;
        for (std::size_t i : fit_on) m += ds.features(static_cast<Index>(i), c);
        m /= k;
        double ss = 0.0;
        for (std::size_t i : fit_on) {
            double dv = ds.features(static_cast<Index>(i), c) - m;
            ss += dv * dv;
        }
        double sd = fit_on.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
        double scale = sd > 1e-12 ? sd : 1.0;
        out.features.col(c) = (ds.features.col(c).array() - m) / scale;
    }

    double abs_mean = 0.0;
    for (std::size_t i : fit_on) abs_mean += std::abs(ds.labels[static_cast<Index>(i)]);
    abs_mean /= k;
    if (abs_mean <= 0.0) throw DataError("normalize: labels are all zero on the fit split, label scale undefined");
    out.labels = ds.labels / abs_mean;
    out.label_scale = abs_mean;
    return out;
}

// Builds `n_splits` random train/test partitions. Each plan's seed is
// derived from the master seed with mix_seed, so the whole schedule is
// reproducible across platforms.
inline std::vector<SplitPlan> make_splits(std::size_t n, std::size_t n_splits, double fraction,
                                          std::uint64_t seed) {
    require(n >= 5, "make_splits: need n >= 5");
    require(fraction > 0.0 && fraction < 1.0, "make_splits: fraction must be in (0,1)");
    std::vector<SplitPlan> plans;
    plans.reserve(n_splits);
    for (std::size_t s = 0; s < n_splits; ++s) {
        SplitPlan plan;
        plan.seed = mix_seed(seed, s);
        Rng rng(plan.seed);
        std::vector<std::size_t> perm = rng.permutation(n);
        auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
        n_train = std::min(std::max<std::size_t>(n_train, 1), n - 1);
        plan.train_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
        plan.test_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
        std::sort(plan.train_indices.begin(), plan.train_indices.end());
        std::sort(plan.test_indices.begin(), plan.test_indices.end());
        plans.push_back(std::move(plan));
    }
    return plans;
}

}  // namespace autocp
