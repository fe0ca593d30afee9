#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "osda/matrix.hpp"

namespace osda {

/// Used both as the "no label" encoding in feature CSVs and as the unknown
/// class marker in predictions and evaluation truth.
inline constexpr int kUnknownLabel = -1;

struct LabeledSet {
    Matrix features;
    std::vector<int> labels;
    std::vector<std::string> label_names;  // optional; empty when unnamed

    std::size_t size() const { return features.rows(); }
};

/// Target-domain features. hidden_labels exist only for evaluation; training
/// entry points take a bare feature Matrix so the labels cannot leak into
/// adaptation.
struct UnlabeledSet {
    Matrix features;
    std::optional<std::vector<int>> hidden_labels;

    std::size_t size() const { return features.rows(); }
};

/// Raw contents of a feature CSV: header "label,f0,...,fD", one row per
/// instance, label -1 meaning unlabeled.
struct FeatureFile {
    Matrix features;
    std::vector<int> labels;
};

FeatureFile load_feature_file(const std::filesystem::path& path);
void save_feature_file(const FeatureFile& file, const std::filesystem::path& path);
void save_feature_file(const LabeledSet& set, const std::filesystem::path& path);
void save_feature_file(const UnlabeledSet& set, const std::filesystem::path& path);

/// Throws input_error if any row is unlabeled.
LabeledSet to_labeled(const FeatureFile& file);
/// Keeps labels as hidden_labels when at least one row carries one.
UnlabeledSet to_unlabeled(const FeatureFile& file);

std::vector<int> distinct_labels(std::span<const int> labels);

/// Remaps arbitrary nonnegative class ids onto [0, C) by sorted id, returning
/// the id list so the mapping can be undone (shared_labels in a model).
struct Canonicalized {
    LabeledSet set;
    std::vector<int> class_ids;
};
Canonicalized canonicalize_labels(const LabeledSet& set);

}  // namespace osda
