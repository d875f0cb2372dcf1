#include "unleak/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "unleak/errors.hpp"
#include "unleak/rng.hpp"

namespace unleak {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace

std::size_t RawTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw DataError("column not found: " + name);
}

void EncodedDataset::check() const {
    if (num_classes < 2) throw DataError("dataset must have at least 2 classes");
    if (feature_dim == 0) throw DataError("dataset has no features");
    if (features.size() != labels.size() * feature_dim)
        throw DataError("feature matrix and label count disagree");
    for (int y : labels)
        if (y < 0 || y >= num_classes) throw DataError("label out of range");
    for (double v : features)
        if (!std::isfinite(v)) throw DataError("non-finite feature value");
}

bool SubsetHandle::contains(std::size_t parent_index) const {
    return std::binary_search(indices.begin(), indices.end(), parent_index);
}

SubsetHandle make_subset(DatasetPtr parent, std::vector<std::size_t> indices) {
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    if (!indices.empty() && indices.back() >= parent->num_rows())
        throw DataError("subset index out of range");
    return SubsetHandle{std::move(parent), std::move(indices)};
}

SubsetHandle full_subset(DatasetPtr parent) {
    std::vector<std::size_t> idx(parent->num_rows());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return SubsetHandle{std::move(parent), std::move(idx)};
}

RawTable load_csv(const std::string& path, const std::string& label_column,
                  const std::set<std::string>& /*categorical_columns*/) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);

    RawTable table;
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    table.header = split_line(line);
    if (table.header.empty()) throw DataError("empty header row: " + path);
    table.column_index(label_column);  // label column must exist

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != table.header.size())
            throw DataError("ragged row at line " + std::to_string(line_no) + ": expected " +
                            std::to_string(table.header.size()) + " cells, got " +
                            std::to_string(cells.size()));
        // Rows with missing values are dropped rather than imputed.
        bool has_empty = std::any_of(cells.begin(), cells.end(),
                                     [](const std::string& c) { return c.empty(); });
        if (has_empty) continue;
        table.rows.push_back(std::move(cells));
    }
    return table;
}

EncodedDataset encode(const RawTable& raw, const std::string& label_column,
                      const std::set<std::string>& categorical_columns,
                      const std::set<std::string>& drop_columns) {
    const std::size_t label_col = raw.column_index(label_column);
    const std::size_t n = raw.num_rows();
    if (n == 0) throw DataError("cannot encode an empty table");

    // Label mapping in first-appearance order; every class must occur twice.
    std::unordered_map<std::string, int> label_map;
    std::vector<std::string> class_names;
    std::vector<std::size_t> class_counts;
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::string& v = raw.rows[i][label_col];
        auto it = label_map.find(v);
        if (it == label_map.end()) {
            it = label_map.emplace(v, static_cast<int>(class_names.size())).first;
            class_names.push_back(v);
            class_counts.push_back(0);
        }
        labels[i] = it->second;
        ++class_counts[it->second];
    }
    if (class_names.size() < 2) throw DataError("label column has a single class");
    for (std::size_t c = 0; c < class_counts.size(); ++c)
        if (class_counts[c] < 2)
            throw DataError("label value occurs only once: " + class_names[c]);

    struct Column {
        std::size_t raw_index;
        bool categorical;
        std::vector<std::string> categories;  // first-appearance order
        double min = 0.0, max = 0.0;
    };
    std::vector<Column> columns;
    for (std::size_t c = 0; c < raw.num_columns(); ++c) {
        const std::string& name = raw.header[c];
        if (c == label_col || drop_columns.count(name)) continue;
        Column col{c, categorical_columns.count(name) > 0, {}, 0.0, 0.0};
        if (col.categorical) {
            std::unordered_map<std::string, int> seen;
            for (std::size_t i = 0; i < n; ++i) {
                const std::string& v = raw.rows[i][c];
                if (seen.emplace(v, 0).second) col.categories.push_back(v);
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                double v;
                if (!parse_double(raw.rows[i][c], v))
                    throw DataError("non-numeric cell '" + raw.rows[i][c] + "' in column " +
                                    name);
                if (i == 0 || v < col.min) col.min = v;
                if (i == 0 || v > col.max) col.max = v;
            }
        }
        columns.push_back(std::move(col));
    }

    EncodedDataset ds;
    ds.labels = std::move(labels);
    ds.num_classes = static_cast<int>(class_names.size());
    ds.class_names = std::move(class_names);
    for (const auto& col : columns) {
        if (col.categorical)
            for (const auto& cat : col.categories)
                ds.feature_names.push_back(raw.header[col.raw_index] + "=" + cat);
        else
            ds.feature_names.push_back(raw.header[col.raw_index]);
    }
    ds.feature_dim = ds.feature_names.size();
    if (ds.feature_dim == 0) throw DataError("no feature columns left after dropping");

    ds.features.assign(n * ds.feature_dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double* out = ds.features.data() + i * ds.feature_dim;
        std::size_t f = 0;
        for (const auto& col : columns) {
            const std::string& v = raw.rows[i][col.raw_index];
            if (col.categorical) {
                for (std::size_t k = 0; k < col.categories.size(); ++k)
                    out[f + k] = (col.categories[k] == v) ? 1.0 : 0.0;
                f += col.categories.size();
            } else {
                double x = 0.0;
                parse_double(v, x);  // validated during the min/max pass
                const double range = col.max - col.min;
                out[f++] = range > 0.0 ? (x - col.min) / range : 0.0;
            }
        }
    }
    ds.check();
    return ds;
}

namespace {

std::vector<std::size_t> split_sizes(std::size_t n, const std::vector<double>& fractions) {
    if (fractions.empty()) throw DataError("fractions must be non-empty");
    double sum = 0.0;
    for (double f : fractions) {
        if (f <= 0.0) throw DataError("fractions must be positive");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DataError("fractions must sum to 1");

    // Largest-remainder rounding, ties broken by fraction order.
    std::vector<std::size_t> sizes(fractions.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        const double exact = fractions[i] * static_cast<double>(n);
        sizes[i] = static_cast<std::size_t>(std::floor(exact));
        assigned += sizes[i];
        remainders.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++sizes[remainders[r].second];
    return sizes;
}

std::vector<SubsetHandle> split_indices(DatasetPtr parent, std::vector<std::size_t> pool,
                                        const std::vector<double>& fractions,
                                        std::uint64_t seed) {
    if (pool.empty()) throw DataError("cannot split an empty dataset");
    const auto sizes = split_sizes(pool.size(), fractions);
    Rng rng(seed);
    rng.shuffle(pool);
    std::vector<SubsetHandle> out;
    out.reserve(sizes.size());
    std::size_t offset = 0;
    for (std::size_t s : sizes) {
        std::vector<std::size_t> part(pool.begin() + offset, pool.begin() + offset + s);
        std::sort(part.begin(), part.end());
        out.push_back(SubsetHandle{parent, std::move(part)});
        offset += s;
    }
    return out;
}

}  // namespace

std::vector<SubsetHandle> split_disjoint(DatasetPtr ds, const std::vector<double>& fractions,
                                         std::uint64_t seed) {
    std::vector<std::size_t> all(ds->num_rows());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return split_indices(ds, std::move(all), fractions, seed);
}

std::vector<SubsetHandle> split_disjoint(const SubsetHandle& pool,
                                         const std::vector<double>& fractions,
                                         std::uint64_t seed) {
    return split_indices(pool.parent, pool.indices, fractions, seed);
}

std::vector<SubsetHandle> sample_subsets(const SubsetHandle& pool, std::size_t count,
                                         std::size_t size, std::uint64_t seed) {
    if (size > pool.size())
        throw DataError("subset size " + std::to_string(size) + " exceeds pool of " +
                        std::to_string(pool.size()));
    std::vector<SubsetHandle> out;
    out.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
        Rng rng(mix_seed(seed, j));
        auto positions = rng.sample_without_replacement(pool.size(), size);
        std::vector<std::size_t> idx(size);
        for (std::size_t i = 0; i < size; ++i) idx[i] = pool.indices[positions[i]];
        std::sort(idx.begin(), idx.end());
        out.push_back(SubsetHandle{pool.parent, std::move(idx)});
    }
    return out;
}

namespace {

constexpr char kDatasetMagic[4] = {'U', 'A', 'D', 'S'};
constexpr std::uint16_t kDatasetVersion = 1;

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.insert(out.end(), buf, buf + sizeof(T));
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

struct ByteReader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;

    template <class T>
    T get() {
        if (pos + sizeof(T) > size) throw DataError("truncated dataset file");
        T v;
        std::memcpy(&v, data + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
    std::string get_string() {
        const auto len = get<std::uint32_t>();
        if (pos + len > size) throw DataError("truncated dataset file");
        std::string s(reinterpret_cast<const char*>(data + pos), len);
        pos += len;
        return s;
    }
};

}  // namespace

void save_dataset(const EncodedDataset& ds, const std::string& path) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kDatasetMagic, kDatasetMagic + 4);
    put<std::uint16_t>(out, kDatasetVersion);
    put<std::uint64_t>(out, ds.num_rows());
    put<std::uint64_t>(out, ds.feature_dim);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.num_classes));
    for (const auto& name : ds.feature_names) put_string(out, name);
    for (const auto& name : ds.class_names) put_string(out, name);
    for (double v : ds.features) put<double>(out, v);
    for (int y : ds.labels) put<std::int32_t>(out, y);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

EncodedDataset load_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    ByteReader r{bytes.data(), bytes.size()};
    char magic[4];
    for (char& c : magic) c = static_cast<char>(r.get<std::uint8_t>());
    if (std::memcmp(magic, kDatasetMagic, 4) != 0) throw DataError("bad dataset magic");
    if (r.get<std::uint16_t>() != kDatasetVersion) throw DataError("unsupported dataset version");

    EncodedDataset ds;
    const auto rows = r.get<std::uint64_t>();
    ds.feature_dim = r.get<std::uint64_t>();
    ds.num_classes = static_cast<int>(r.get<std::uint32_t>());
    ds.feature_names.resize(ds.feature_dim);
    for (auto& name : ds.feature_names) name = r.get_string();
    ds.class_names.resize(ds.num_classes);
    for (auto& name : ds.class_names) name = r.get_string();
    ds.features.resize(rows * ds.feature_dim);
    for (double& v : ds.features) v = r.get<double>();
    ds.labels.resize(rows);
    for (int& y : ds.labels) y = r.get<std::int32_t>();
    ds.check();
    return ds;
}

}  // namespace unleak
