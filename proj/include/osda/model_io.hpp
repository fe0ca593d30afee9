#pragma once

#include <filesystem>
#include <utility>

#include "osda/network.hpp"

namespace osda {

/// Vendor models carry the magic "INHM", client-adapted models "INHT". Layout
/// is otherwise identical; see docs/model_format.md for the byte table.
enum class ModelKind { vendor, adapted };

void save_model(const InheritableModel& model, const std::filesystem::path& path,
                ModelKind kind = ModelKind::vendor);

/// Loads a model, insisting on the magic for `expected`. Throws format_error
/// naming the offending field on bad magic, unsupported version, truncation or
/// checksum mismatch.
InheritableModel load_model(const std::filesystem::path& path,
                            ModelKind expected = ModelKind::vendor);

/// Loads either kind and reports which one was found.
std::pair<InheritableModel, ModelKind> load_any_model(const std::filesystem::path& path);

}  // namespace osda
