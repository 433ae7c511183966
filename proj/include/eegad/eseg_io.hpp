#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "eegad/segment.hpp"

namespace eegad {

// Segment file format "ESEG v1", little-endian throughout:
//   magic "ESEG" | version u16 | K u32 | L u32 | sample_rate f32 |
//   label u8 | patient_id length u32 + UTF-8 bytes | K*L f32 row-major payload
//
// Plain CSV is also accepted: a header line
//   # rate=<Hz> label=<name> patient=<id>
// followed by one comma-separated row per channel.

void write_eseg(const std::filesystem::path& path, const EegSegment& seg);
EegSegment read_eseg(const std::filesystem::path& path);

void write_segment_csv(const std::filesystem::path& path, const EegSegment& seg);
EegSegment read_segment_csv(const std::filesystem::path& path);

// Dispatches on the .eseg / .csv extension (falls back to sniffing the magic).
EegSegment read_segment(const std::filesystem::path& path);

struct ManifestRow {
    std::string file;
    Label label = Label::Normal;
    std::string patient_id;
    std::uint64_t seed = 0;
};

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

// Loads every manifest entry relative to the manifest's directory.
Dataset load_dataset(const std::filesystem::path& manifest_path, float duration_s);

// Writes to "<path>.tmp" then renames, so readers never observe a torn file.
void atomic_write_bytes(const std::filesystem::path& path, const std::string& bytes);
void atomic_write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace eegad
