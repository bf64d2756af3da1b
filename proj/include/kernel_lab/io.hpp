#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "binary_io.hpp"
#include "dataset.hpp"

namespace kernel_lab {

namespace detail {

inline int class_count_for(const std::vector<int>& labels) {
    int top = 0;
    for (int l : labels) top = std::max(top, l);
    return std::max(2, top + 1);
}

}  // namespace detail

/// IDX image/label pair: big-endian magic 0x00000803 (u8 images, n x rows x
/// cols) and 0x00000801 (u8 labels). Pixels are scaled by 1/255.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    binary::Reader images(binary::read_file(images_path), images_path);
    if (images.u32_be() != 0x00000803U) throw FormatError(images_path + ": bad IDX image magic", 0);
    const std::uint32_t n = images.u32_be();
    const std::uint32_t rows = images.u32_be();
    const std::uint32_t cols = images.u32_be();
    const std::uint64_t d = std::uint64_t{rows} * cols;
    if (images.remaining() < std::uint64_t{n} * d) {
        throw FormatError(images_path + ": truncated pixel data, expected " + std::to_string(std::uint64_t{n} * d) +
                              " bytes",
                          images.offset() + images.remaining());
    }

    binary::Reader labels(binary::read_file(labels_path), labels_path);
    if (labels.u32_be() != 0x00000801U) throw FormatError(labels_path + ": bad IDX label magic", 0);
    const std::uint32_t n_labels = labels.u32_be();
    if (n_labels != n) {
        throw FormatError(labels_path + ": " + std::to_string(n_labels) + " labels for " + std::to_string(n) +
                              " images",
                          4);
    }
    if (labels.remaining() < n) {
        throw FormatError(labels_path + ": truncated label data", labels.offset() + labels.remaining());
    }

    Matrix X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    const auto* px = reinterpret_cast<const unsigned char*>(images.cursor());
    for (std::uint64_t i = 0; i < n; ++i)
        for (std::uint64_t j = 0; j < d; ++j)
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = px[i * d + j] / 255.0;
    const auto* lb = reinterpret_cast<const unsigned char*>(labels.cursor());
    std::vector<int> y(lb, lb + n);
    const int k = detail::class_count_for(y);
    return make_dataset(std::move(X), std::move(y), k, "idx");
}

namespace detail {

// RFC-4180 record splitter: quoted fields, doubled quotes, CRLF or LF.
class CsvReader {
public:
    CsvReader(std::string text, std::string source) : text_(std::move(text)), source_(std::move(source)) {}

    bool next(std::vector<std::string>& fields) {
        fields.clear();
        if (pos_ >= text_.size()) return false;
        std::string field;
        bool quoted = false;
        while (pos_ < text_.size()) {
            const char ch = text_[pos_];
            if (quoted) {
                if (ch == '"') {
                    if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '"') {
                        field.push_back('"');
                        pos_ += 2;
                        continue;
                    }
                    quoted = false;
                    ++pos_;
                    continue;
                }
                field.push_back(ch);
                ++pos_;
                continue;
            }
            if (ch == '"' && field.empty()) {
                quoted = true;
                ++pos_;
            } else if (ch == ',') {
                fields.push_back(std::move(field));
                field.clear();
                ++pos_;
            } else if (ch == '\r' || ch == '\n') {
                pos_ += (ch == '\r' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '\n') ? 2 : 1;
                break;
            } else {
                field.push_back(ch);
                ++pos_;
            }
        }
        if (quoted) throw FormatError(source_ + ": unterminated quoted field", pos_);
        fields.push_back(std::move(field));
        return true;
    }

    std::size_t offset() const { return pos_; }

private:
    std::string text_;
    std::string source_;
    std::size_t pos_ = 0;
};

inline bool parse_double(const std::string& s, double& out) {
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t");
    if (b == std::string::npos) return false;
    const char* first = s.data() + b;
    const char* last = s.data() + e + 1;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

}  // namespace detail

/// CSV with a header row; every column except `label_column` is an f64
/// feature. Non-negative integer labels are used as class indices; any other
/// label set is mapped to indices in sorted order.
inline Dataset load_csv(const std::string& path, const std::string& label_column) {
    const auto bytes = binary::read_file(path);
    detail::CsvReader reader(std::string(bytes.begin(), bytes.end()), path);
    std::vector<std::string> header;
    if (!reader.next(header)) throw FormatError(path + ": missing header row", 0);
    const auto it = std::find(header.begin(), header.end(), label_column);
    if (it == header.end()) throw InputError(path + ": no label column named '" + label_column + "'");
    const auto label_idx = static_cast<std::size_t>(it - header.begin());

    std::vector<std::vector<double>> rows;
    std::vector<std::string> raw_labels;
    std::vector<std::string> fields;
    while (true) {
        const std::size_t record_start = reader.offset();
        if (!reader.next(fields)) break;
        if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
        if (fields.size() != header.size()) {
            throw FormatError(path + ": record has " + std::to_string(fields.size()) + " fields, header has " +
                                  std::to_string(header.size()),
                              record_start);
        }
        std::vector<double> row;
        row.reserve(header.size() - 1);
        for (std::size_t j = 0; j < fields.size(); ++j) {
            if (j == label_idx) continue;
            double v = 0.0;
            if (!detail::parse_double(fields[j], v)) {
                throw FormatError(path + ": column '" + header[j] + "' value '" + fields[j] + "' is not a number",
                                  record_start);
            }
            row.push_back(v);
        }
        rows.push_back(std::move(row));
        raw_labels.push_back(fields[label_idx]);
    }
    if (rows.empty()) throw FormatError(path + ": no data rows", reader.offset());

    std::vector<int> labels(raw_labels.size());
    bool direct = true;
    std::vector<double> numeric(raw_labels.size());
    bool all_numeric = true;
    for (std::size_t i = 0; i < raw_labels.size(); ++i) {
        double v = 0.0;
        if (!detail::parse_double(raw_labels[i], v)) {
            all_numeric = false;
            direct = false;
            continue;
        }
        numeric[i] = v;
        if (v < 0.0 || v != std::floor(v) || v > 1e6) direct = false;
    }
    if (direct) {
        for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(numeric[i]);
    } else if (all_numeric) {
        const std::set<double> distinct(numeric.begin(), numeric.end());
        const std::vector<double> order(distinct.begin(), distinct.end());
        for (std::size_t i = 0; i < labels.size(); ++i)
            labels[i] = static_cast<int>(std::lower_bound(order.begin(), order.end(), numeric[i]) - order.begin());
    } else {
        const std::set<std::string> distinct(raw_labels.begin(), raw_labels.end());
        const std::vector<std::string> order(distinct.begin(), distinct.end());
        for (std::size_t i = 0; i < labels.size(); ++i)
            labels[i] = static_cast<int>(std::lower_bound(order.begin(), order.end(), raw_labels[i]) - order.begin());
    }

    Matrix X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(header.size() - 1));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    const int k = detail::class_count_for(labels);
    return make_dataset(std::move(X), std::move(labels), k, path);
}

/// Writes features plus a trailing integer `label` column.
inline void save_csv(const Dataset& ds, const std::string& path) {
    std::ostringstream out;
    out.precision(17);
    for (Eigen::Index j = 0; j < ds.dim(); ++j) out << 'x' << j << ',';
    out << "label\n";
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
        for (Eigen::Index j = 0; j < ds.dim(); ++j) out << ds.features(i, j) << ',';
        out << ds.labels[static_cast<std::size_t>(i)] << '\n';
    }
    const std::string text = out.str();
    binary::write_file(path, std::vector<char>(text.begin(), text.end()));
}

// Dataset container: "IKD1", n u64, d u64, c u64, class_count u64, name length
// u64 and bytes, then row-major features and targets as f64 and labels as u64.
inline std::vector<char> serialize_dataset(const Dataset& ds) {
    binary::Writer w;
    w.bytes("IKD1");
    w.u64(static_cast<std::uint64_t>(ds.size()));
    w.u64(static_cast<std::uint64_t>(ds.dim()));
    w.u64(static_cast<std::uint64_t>(ds.targets.cols()));
    w.u64(static_cast<std::uint64_t>(ds.class_count));
    w.u64(ds.name.size());
    w.bytes(ds.name);
    for (Eigen::Index i = 0; i < ds.features.rows(); ++i)
        for (Eigen::Index j = 0; j < ds.features.cols(); ++j) w.f64(ds.features(i, j));
    for (Eigen::Index i = 0; i < ds.targets.rows(); ++i)
        for (Eigen::Index j = 0; j < ds.targets.cols(); ++j) w.f64(ds.targets(i, j));
    for (int l : ds.labels) w.u64(static_cast<std::uint64_t>(l));
    return w.data();
}

inline Dataset deserialize_dataset(std::vector<char> bytes, const std::string& source = "dataset") {
    binary::Reader r(std::move(bytes), source);
    if (r.bytes(4) != "IKD1") throw FormatError(source + ": bad magic, expected IKD1", 0);
    const auto n = r.u64();
    const auto d = r.u64();
    const auto c = r.u64();
    const auto k = r.u64();
    const auto name_len = r.u64();
    if (name_len > r.remaining()) r.fail("name length exceeds file");
    Dataset ds;
    ds.name = r.bytes(name_len);
    const std::uint64_t payload = (n * d + n * c + n) * 8;
    if (r.remaining() < payload) r.fail("truncated payload, expected " + std::to_string(payload) + " bytes");
    ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    ds.targets.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < ds.features.rows(); ++i)
        for (Eigen::Index j = 0; j < ds.features.cols(); ++j) ds.features(i, j) = r.f64();
    for (Eigen::Index i = 0; i < ds.targets.rows(); ++i)
        for (Eigen::Index j = 0; j < ds.targets.cols(); ++j) ds.targets(i, j) = r.f64();
    ds.labels.resize(n);
    for (auto& l : ds.labels) {
        const auto v = r.u64();
        if (v >= k) r.fail("label " + std::to_string(v) + " outside class count " + std::to_string(k));
        l = static_cast<int>(v);
    }
    ds.class_count = static_cast<int>(k);
    return ds;
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
    binary::write_file(path, serialize_dataset(ds));
}

inline Dataset load_dataset(const std::string& path) { return deserialize_dataset(binary::read_file(path), path); }

}  // namespace kernel_lab
