#pragma once

// Dataset container, synthetic stand-ins shaped like the small UCI tables
// (class-conditional Gaussian blobs), and CSV ingestion (header row, numeric
// feature columns, final column = label).

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "levylab/potential.hpp"
#include "levylab/rng.hpp"

namespace levylab {

struct Dataset {
    Mat features;        // D x d_in
    Vec labels;          // class index (stored as double) or regression target
    std::string name;

    std::size_t size() const { return features.size(); }
    std::size_t dim() const { return features.empty() ? 0 : features[0].size(); }

    void validate() const {
        if (features.empty()) throw std::invalid_argument("Dataset: empty");
        if (labels.size() != features.size()) {
            throw std::invalid_argument("Dataset: feature/label count mismatch");
        }
        for (const auto& row : features) {
            if (row.size() != features[0].size()) {
                throw std::invalid_argument("Dataset: ragged feature rows");
            }
            for (double v : row) {
                if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite feature");
            }
        }
        for (double v : labels) {
            if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite label");
        }
    }

    int n_classes() const {
        int mx = 0;
        for (double v : labels) mx = std::max(mx, static_cast<int>(v));
        return mx + 1;
    }
};

// Class-conditional Gaussian blobs: unit-variance features around per-class
// mean vectors drawn on a sphere of radius `separation`.
inline Dataset make_blobs(std::string name, std::size_t n_samples, std::size_t d_in,
                          int n_classes, double separation, std::uint64_t seed) {
    if (n_samples < 2 || d_in < 1 || n_classes < 2) {
        throw std::invalid_argument("make_blobs: need n_samples >= 2, d_in >= 1, classes >= 2");
    }
    Rng g = make_rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Mat means(static_cast<std::size_t>(n_classes), Vec(d_in));
    for (auto& m : means) {
        double norm = 0.0;
        for (auto& v : m) {
            v = nd(g);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : m) v *= separation / std::max(norm, 1e-12);
    }
    Dataset ds;
    ds.name = std::move(name);
    ds.features.resize(n_samples, Vec(d_in));
    ds.labels.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        int c = static_cast<int>(i) % n_classes;
        ds.labels[i] = c;
        for (std::size_t j = 0; j < d_in; ++j) {
            ds.features[i][j] = means[static_cast<std::size_t>(c)][j] + nd(g);
        }
    }
    ds.validate();
    return ds;
}

// stand-ins with the shapes of the small UCI tables the experiments reference
inline Dataset make_named_synthetic(const std::string& which, std::uint64_t seed) {
    if (which == "breastw") return make_blobs("breastw-synth", 699, 9, 2, 2.5, seed);
    if (which == "cardio") return make_blobs("cardio-synth", 2000, 21, 3, 2.0, seed);
    if (which == "satellite") return make_blobs("satellite-synth", 4435, 36, 6, 2.0, seed);
    if (which == "speech") return make_blobs("speech-synth", 3686, 24, 2, 1.5, seed);
    throw std::invalid_argument("make_named_synthetic: unknown preset '" + which + "'");
}

// linearly separable 2D two-class toy set (for convex sanity checks)
inline Dataset make_separable2d(std::size_t n_samples, std::uint64_t seed) {
    Rng g = make_rng(seed);
    Dataset ds;
    ds.name = "separable2d";
    ds.features.resize(n_samples, Vec(2));
    ds.labels.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        int c = static_cast<int>(i) % 2;
        ds.labels[i] = c;
        ds.features[i][0] = (c == 0 ? -2.0 : 2.0) + uniform01(g) - 0.5;
        ds.features[i][1] = uniform01(g) - 0.5;
    }
    return ds;
}

inline Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open '" + path + "'");
    Dataset ds;
    ds.name = path;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file");
    std::size_t n_cols = 0;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        Vec row;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                double v = std::stod(cell, &used);
                row.push_back(v);
            } catch (const std::exception&) {
                throw std::runtime_error("load_csv: non-numeric cell '" + cell + "' at line " +
                                         std::to_string(lineno));
            }
        }
        if (row.size() < 2) {
            throw std::runtime_error("load_csv: need at least one feature and a label at line " +
                                     std::to_string(lineno));
        }
        if (n_cols == 0) n_cols = row.size();
        if (row.size() != n_cols) {
            throw std::runtime_error("load_csv: inconsistent column count at line " +
                                     std::to_string(lineno));
        }
        ds.labels.push_back(row.back());
        row.pop_back();
        ds.features.push_back(std::move(row));
    }
    ds.validate();
    return ds;
}

}  // namespace levylab
