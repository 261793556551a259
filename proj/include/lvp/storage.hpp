#pragma once

// On-disk formats. Every integer and float is little-endian; floats are
// IEEE-754 binary32 unless noted. Strings are a u32 byte length followed by
// UTF-8 bytes. Domain ids use 0xFFFFFFFF for "none".
//
// LVPE (embedding dataset), version 1
//   "LVPE" u32 version, u32 dim, u64 record_count, u32 flags, str namespace
//   record_count x { u32 local_class_id, u32 domain_id, dim x f32 }
//
// LVPP (pool), version 1
//   "LVPP" u32 version, u32 dim, u32 class_count
//   class_count x { str namespace, u32 local_id, str display_name, u32 entry_count,
//                   entry_count x { u8 modality, u32 domain_id, u64 sample_count, dim x f32 } }
//   u32 provenance_count, provenance_count x str
//
// LVPA (LVP-IT parameters), version 1
//   "LVPA" u32 version, u32 dim, u32 set_count
//   set_count x { u32 task_index, u32 domain_id, u32 class_count,
//                 class_count x { str namespace, u32 local_id, dim x f32 alpha, dim x f32 beta } }
//
// LVPH (linear head), version 1; parameters in binary64
//   "LVPH" u32 version, u32 dim, u32 rows
//   rows x { str namespace, u32 local_id, f64 bias, dim x f64 weights }
//
// Readers check magic and version before touching the payload and require the
// file length to match the payload exactly.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lvp/core_types.hpp"
#include "lvp/it_trainer.hpp"
#include "lvp/linear_head.hpp"

namespace lvp {

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::uint32_t kNoDomain = 0xFFFFFFFFu;
inline constexpr std::uint32_t kFlagNormalized = 1u << 0;

struct EmbeddingDataset {
    std::string ns;
    std::uint32_t dim = 0;
    std::uint32_t flags = 0;
    std::vector<Record> records;
};

struct ReadOptions {
    // L2-normalise every record on load (and set kFlagNormalized).
    bool normalize = false;
};

// Header plus payload size of an LVPE file.
std::uint64_t embedding_file_size(std::uint32_t dim, std::uint64_t record_count,
                                  std::size_t namespace_bytes);

std::string encode_embeddings(const EmbeddingDataset& ds);
EmbeddingDataset decode_embeddings(std::string_view bytes);
void write_embeddings(const std::filesystem::path& path, const EmbeddingDataset& ds);
EmbeddingDataset read_embeddings(const std::filesystem::path& path, const ReadOptions& opts = {});

// Unit-L2 copy; InvalidInput on a zero record.
EmbeddingDataset normalized(EmbeddingDataset ds);

std::string encode_pool(const Pool& pool);
Pool decode_pool(std::string_view bytes);
void write_pool(const std::filesystem::path& path, const Pool& pool);
Pool read_pool(const std::filesystem::path& path);

std::string encode_it_params(std::span<const ITParams> sets);
std::vector<ITParams> decode_it_params(std::string_view bytes);
void write_it_params(const std::filesystem::path& path, std::span<const ITParams> sets);
std::vector<ITParams> read_it_params(const std::filesystem::path& path);

std::string encode_head(const LinearClassifier& head);
LinearClassifier decode_head(std::string_view bytes);
void write_head(const std::filesystem::path& path, const LinearClassifier& head);
LinearClassifier read_head(const std::filesystem::path& path);

// JSON: {"format":"lvp-report","version":1,"stages":[...],"tests":[{"label","size"}],
//        "accuracy":[[x|null,...],...],"final_average","weighted_final_average","metadata":{}}
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view text);
void write_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport read_report(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace lvp
