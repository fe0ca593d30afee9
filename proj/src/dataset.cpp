#include "osda/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include "osda/errors.hpp"

namespace osda {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return cells;
}

double parse_double(const std::string& cell, std::size_t line_no) {
    double v = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end) {
        throw parse_error("non-numeric cell '" + cell + "'", line_no);
    }
    return v;
}

int parse_label(const std::string& cell, std::size_t line_no) {
    int v = 0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end) {
        throw parse_error("non-integer label '" + cell + "'", line_no);
    }
    return v;
}

void format_double(std::string& out, double v) {
    // Shortest representation that parses back to the same bits.
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
}

}  // namespace

FeatureFile load_feature_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open feature file: " + path.string());

    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw parse_error("missing header row", line_no);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_csv_line(line);
    if (header.empty() || header[0] != "label") {
        throw parse_error("header must start with 'label'", line_no);
    }
    const std::size_t dims = header.size() - 1;
    for (std::size_t j = 0; j < dims; ++j) {
        if (header[j + 1] != "f" + std::to_string(j)) {
            throw parse_error("unexpected header column '" + header[j + 1] + "'", line_no);
        }
    }

    std::vector<int> labels;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != dims + 1) {
            throw parse_error("expected " + std::to_string(dims + 1) + " cells, found " +
                                  std::to_string(cells.size()),
                              line_no);
        }
        labels.push_back(parse_label(cells[0], line_no));
        for (std::size_t j = 0; j < dims; ++j) values.push_back(parse_double(cells[j + 1], line_no));
    }

    FeatureFile file;
    file.features = Matrix(labels.size(), dims);
    file.features.data() = std::move(values);
    file.labels = std::move(labels);
    return file;
}

void save_feature_file(const FeatureFile& file, const std::filesystem::path& path) {
    if (file.labels.size() != file.features.rows()) {
        throw input_error("save_feature_file: one label per row required");
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw input_error("cannot write feature file: " + path.string());

    std::string buf = "label";
    for (std::size_t j = 0; j < file.features.cols(); ++j) buf += ",f" + std::to_string(j);
    buf += '\n';
    for (std::size_t i = 0; i < file.features.rows(); ++i) {
        buf += std::to_string(file.labels[i]);
        for (double v : file.features.row(i)) {
            buf += ',';
            format_double(buf, v);
        }
        buf += '\n';
    }
    out << buf;
    if (!out) throw input_error("write failed: " + path.string());
}

void save_feature_file(const LabeledSet& set, const std::filesystem::path& path) {
    save_feature_file(FeatureFile{set.features, set.labels}, path);
}

void save_feature_file(const UnlabeledSet& set, const std::filesystem::path& path) {
    FeatureFile file;
    file.features = set.features;
    file.labels = set.hidden_labels ? *set.hidden_labels
                                    : std::vector<int>(set.features.rows(), kUnknownLabel);
    save_feature_file(file, path);
}

LabeledSet to_labeled(const FeatureFile& file) {
    for (std::size_t i = 0; i < file.labels.size(); ++i) {
        if (file.labels[i] < 0) {
            throw input_error("row " + std::to_string(i) + " is unlabeled; a labeled set is required");
        }
    }
    return LabeledSet{file.features, file.labels, {}};
}

UnlabeledSet to_unlabeled(const FeatureFile& file) {
    UnlabeledSet set;
    set.features = file.features;
    if (std::any_of(file.labels.begin(), file.labels.end(), [](int l) { return l >= 0; })) {
        set.hidden_labels = file.labels;
    }
    return set;
}

std::vector<int> distinct_labels(std::span<const int> labels) {
    std::vector<int> out(labels.begin(), labels.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Canonicalized canonicalize_labels(const LabeledSet& set) {
    Canonicalized out;
    out.class_ids = distinct_labels(set.labels);
    std::map<int, int> index;
    for (std::size_t i = 0; i < out.class_ids.size(); ++i)
        index[out.class_ids[i]] = static_cast<int>(i);
    out.set.features = set.features;
    out.set.label_names = set.label_names;
    out.set.labels.reserve(set.labels.size());
    for (int l : set.labels) out.set.labels.push_back(index.at(l));
    return out;
}

}  // namespace osda
