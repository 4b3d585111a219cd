#pragma once

// On-disk formats.
//
// EMBF: "EMBF" | 0x01 | N (u32 LE) | d (u32 LE) | N*d float32 LE, row-major.
// Embedding CSV: header "f0,...,f{d-1}", one row per vector.
// Partition CSV: header "index,subdataset", 0-based row indices.
// Mixture JSON: {"components": [{"u": {"symbols": [...], "mass": [...]},
//                                "v": {...}}, ...],
//                "bridge": {"factor": "u", "symbols": [...], "epsilon": 0.5}}
// ("bridge" is optional; "epsilon" inside it is optional.)

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "fragscope/bridge_planner.hpp"
#include "fragscope/embedding_metrics.hpp"
#include "fragscope/factor_model.hpp"
#include "json.hpp"

namespace fragscope::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const fs::path& path);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const fs::path& path, std::string_view content);

embedding::EmbeddingSet parse_embf(std::string_view bytes);
std::string serialize_embf(const embedding::EmbeddingSet& e);

embedding::EmbeddingSet parse_embedding_csv(std::string_view text);
std::string serialize_embedding_csv(const embedding::EmbeddingSet& e);

/// Picks EMBF or CSV from the leading magic bytes.
embedding::EmbeddingSet load_embeddings(const fs::path& path);

/// `rows` is the embedding row count; every index in [0, rows) must appear once.
embedding::Partition parse_partition_csv(std::string_view text, std::size_t rows);
std::string serialize_partition_csv(const embedding::Partition& p);
embedding::Partition load_partition(const fs::path& path, std::size_t rows);

factor::MixtureModel mixture_from_json(const json& j);
json mixture_to_json(const factor::MixtureModel& mix);
factor::MixtureModel load_mixture(const fs::path& path);

/// The optional "bridge" object of a mixture document.
std::optional<bridge::BridgeSpec> bridge_from_json(const json& doc);
json bridge_to_json(const bridge::BridgeSpec& spec);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

}  // namespace fragscope::io
