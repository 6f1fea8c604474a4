#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "text.hpp"

namespace leakbench {

/// Dense row-major sample x feature matrix with a binary label per row
/// (1 = minority / preterm).
struct FeatureMatrix {
    std::vector<double> values;
    std::size_t n_rows = 0;
    std::vector<std::string> feature_names;
    std::vector<int> labels;
    std::vector<std::string> sample_ids;

    std::size_t n_cols() const { return feature_names.size(); }

    std::span<const double> row(std::size_t i) const { return {values.data() + i * n_cols(), n_cols()}; }
    std::span<double> row(std::size_t i) { return {values.data() + i * n_cols(), n_cols()}; }
    double at(std::size_t r, std::size_t c) const { return values[r * n_cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return values[r * n_cols() + c]; }

    std::vector<double> column(std::size_t c) const {
        std::vector<double> out(n_rows);
        for (std::size_t r = 0; r < n_rows; ++r) out[r] = at(r, c);
        return out;
    }

    std::size_t count_label(int label) const { return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label)); }
    std::size_t minority_count() const { return count_label(1); }
    std::size_t majority_count() const { return count_label(0); }

    void push_row(std::span<const double> row_values, int label, std::string id) {
        values.insert(values.end(), row_values.begin(), row_values.end());
        labels.push_back(label);
        sample_ids.push_back(std::move(id));
        ++n_rows;
    }

    FeatureMatrix empty_like() const {
        FeatureMatrix out;
        out.feature_names = feature_names;
        return out;
    }

    /// Rows at `indices`, in that order.
    FeatureMatrix subset(std::span<const std::size_t> indices) const {
        FeatureMatrix out = empty_like();
        out.values.reserve(indices.size() * n_cols());
        for (auto i : indices) out.push_row(row(i), labels[i], sample_ids[i]);
        return out;
    }

    bool operator==(const FeatureMatrix&) const = default;
};

/// Throws unless the structural invariants hold and every entry is finite.
inline void validate(const FeatureMatrix& m) {
    if (m.values.size() != m.n_rows * m.n_cols() || m.labels.size() != m.n_rows || m.sample_ids.size() != m.n_rows)
        fail(ErrorKind::ShapeMismatch, "feature matrix dimensions are inconsistent");
    for (int label : m.labels)
        if (label != 0 && label != 1) fail(ErrorKind::InvalidSpec, "labels must be 0 or 1");
    for (double v : m.values)
        if (!std::isfinite(v)) fail(ErrorKind::NonFiniteInput, "feature matrix contains a non-finite entry");
}

/// Single CSV: header sample_id,label,<features...>; one row per sample.
/// Extra leading '#' lines carry provenance. Extra trailing columns (e.g. the
/// oversampling audit columns) may be appended by callers.
inline std::string to_csv(const FeatureMatrix& m, const std::vector<std::string>& comments = {},
                          const std::vector<std::string>& extra_columns = {},
                          const std::vector<std::vector<std::string>>& extra_values = {}) {
    std::string out;
    for (const auto& c : comments) out += "# " + c + "\n";
    out += "sample_id,label";
    for (const auto& name : m.feature_names) out += "," + name;
    for (const auto& name : extra_columns) out += "," + name;
    out += '\n';
    for (std::size_t r = 0; r < m.n_rows; ++r) {
        out += m.sample_ids[r] + "," + std::to_string(m.labels[r]);
        for (double v : m.row(r)) out += "," + text::format_double(v);
        if (r < extra_values.size())
            for (const auto& v : extra_values[r]) out += "," + v;
        out += '\n';
    }
    return out;
}

inline void save_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path,
                                const std::vector<std::string>& comments = {}) {
    text::write_file_atomic(path, to_csv(m, comments));
}

inline FeatureMatrix load_feature_matrix(const std::filesystem::path& path) {
    const auto contents = text::read_file(path);
    const auto lines = text::data_lines(contents);
    if (lines.empty()) fail(ErrorKind::MalformedHeader, "empty feature matrix file " + path.string());
    const auto header = text::split(lines[0]);
    if (header.size() < 3 || header[0] != "sample_id" || header[1] != "label")
        fail(ErrorKind::MalformedHeader, "feature matrix header must start with sample_id,label and name a feature");
    FeatureMatrix m;
    m.feature_names.assign(header.begin() + 2, header.end());
    std::vector<double> row(m.n_cols());
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = text::split(lines[i]);
        if (fields.size() != header.size()) fail(ErrorKind::MalformedHeader, "row " + std::to_string(i) + " has wrong width");
        int label = 0;
        if (fields[1] == "1")
            label = 1;
        else if (fields[1] != "0")
            fail(ErrorKind::MalformedHeader, "label must be 0 or 1 in row " + std::to_string(i));
        for (std::size_t c = 0; c < m.n_cols(); ++c) {
            auto v = text::parse_double(fields[c + 2]);
            if (!v) fail(ErrorKind::MalformedHeader, "unparseable value in row " + std::to_string(i));
            row[c] = *v;
        }
        m.push_row(row, label, fields[0]);
    }
    validate(m);
    return m;
}

} // namespace leakbench
