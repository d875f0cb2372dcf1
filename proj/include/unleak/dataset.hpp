#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace unleak {

/// Parsed delimiter-separated text: a header plus textual rows, nothing decoded.
struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t num_rows() const { return rows.size(); }
    std::size_t num_columns() const { return header.size(); }
    std::size_t column_index(const std::string& name) const;  // throws DataError if absent
};

/// Numeric feature matrix (row-major) with dense integer class labels.
/// Immutable after construction; shared across workers via shared_ptr.
struct EncodedDataset {
    std::vector<double> features;  // num_rows x feature_dim, row-major
    std::vector<int> labels;       // in [0, num_classes)
    int num_classes = 0;
    std::size_t feature_dim = 0;
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;  // label value per class index

    std::size_t num_rows() const { return labels.size(); }
    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * feature_dim, feature_dim};
    }
    /// Validates the type invariants; throws DataError on violation.
    void check() const;
};

using DatasetPtr = std::shared_ptr<const EncodedDataset>;

/// A view over distinct rows of a parent dataset. Indices are kept sorted
/// ascending so that equal index sets are equal handles bit-for-bit, which is
/// what makes k=1 SISA training identical to scratch training.
struct SubsetHandle {
    DatasetPtr parent;
    std::vector<std::size_t> indices;  // sorted, distinct, in range

    std::size_t size() const { return indices.size(); }
    std::span<const double> row(std::size_t pos) const { return parent->row(indices[pos]); }
    int label(std::size_t pos) const { return parent->labels[indices[pos]]; }
    bool contains(std::size_t parent_index) const;
};

/// Makes a handle over explicit parent-row indices (deduplicated, sorted).
SubsetHandle make_subset(DatasetPtr parent, std::vector<std::size_t> indices);

/// Handle covering every row of the dataset.
SubsetHandle full_subset(DatasetPtr parent);

/// Parses comma-separated text with a header row. Cells are trimmed of
/// surrounding whitespace. Rows containing empty cells are dropped; ragged
/// rows are an error. `label_column` must name a header column.
RawTable load_csv(const std::string& path, const std::string& label_column,
                  const std::set<std::string>& categorical_columns);

/// Encodes a RawTable: categorical columns one-hot expanded (categories in
/// first-appearance order), numeric columns min-max scaled to [0,1] over the
/// full table (constant columns map to 0), labels mapped to dense integers in
/// first-appearance order. Columns in `drop_columns` are excluded from the
/// feature matrix.
EncodedDataset encode(const RawTable& raw, const std::string& label_column,
                      const std::set<std::string>& categorical_columns,
                      const std::set<std::string>& drop_columns = {});

/// Splits every row of the dataset into pairwise-disjoint handles with sizes
/// proportional to `fractions` (largest-remainder rounding, ties by fraction
/// order). The assignment permutation is determined by `seed`.
std::vector<SubsetHandle> split_disjoint(DatasetPtr ds, const std::vector<double>& fractions,
                                         std::uint64_t seed);

/// Same split applied to a subset of rows instead of the whole dataset.
std::vector<SubsetHandle> split_disjoint(const SubsetHandle& pool,
                                         const std::vector<double>& fractions,
                                         std::uint64_t seed);

/// Draws `count` subsets of `size` distinct rows each from the pool, uniformly
/// without replacement within a subset and independently across subsets.
std::vector<SubsetHandle> sample_subsets(const SubsetHandle& pool, std::size_t count,
                                         std::size_t size, std::uint64_t seed);

/// Binary persistence for prepared datasets (magic "UADS").
void save_dataset(const EncodedDataset& ds, const std::string& path);
EncodedDataset load_dataset(const std::string& path);

}  // namespace unleak
