#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "osda/dataset.hpp"
#include "osda/kvconfig.hpp"

namespace osda {

/// Synthetic open-set benchmark: class-conditional Gaussians whose means sit
/// on a sphere in `dims` dimensions. The source set draws from the first
/// `num_shared` classes; the target draws from all `num_total` classes and is
/// pushed through an affine domain transform (rotation in the first two
/// coordinates, uniform scale, translation). `source_translate` shifts the source frame instead, which
/// gives a way to place several vendors at controlled distances from one
/// fixed target.
struct ShiftSpec {
    std::size_t num_total = 8;
    std::size_t num_shared = 4;
    std::size_t dims = 3;
    std::size_t samples_per_class = 200;
    double class_sep = 6.0;       // class means sit on the sphere of this radius
    double min_class_sep = 4.0;   // enforced minimum distance between class means
    double noise_sigma = 1.0;     // isotropic within-class std
    double rotation_deg = 0.0;  // target transform
    double scale = 1.0;         // target transform
    std::vector<double> translate;         // target transform; empty = zero
    std::vector<double> source_translate;  // applied to source only; empty = zero
    std::uint64_t seed = 1;

    void validate() const;
};

struct GeneratedPair {
    LabeledSet source;    // labels in [0, num_shared)
    UnlabeledSet target;  // hidden_labels in [0, num_total)
    Matrix class_means;   // num_total x dims, before any transform
};

GeneratedPair generate_pair(const ShiftSpec& spec);

/// Config keys: classes, shared_classes, dims, samples_per_class, class_sep,
/// min_class_sep, noise_sigma, rotation_deg, scale, translate,
/// source_translate, seed.
ShiftSpec shift_spec_from_config(const KvConfig& cfg);
KvConfig shift_spec_to_config(const ShiftSpec& spec);
ShiftSpec load_shift_spec(const std::filesystem::path& path);

}  // namespace osda
