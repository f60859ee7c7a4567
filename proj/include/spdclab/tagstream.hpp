// Time-tag streams: ordered detection timestamps in integer picoseconds,
// plus the CSV and binary on-disk formats.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace spdclab {

enum class TagOrigin : std::uint8_t { Photon = 0, Dark = 1 };

struct TagStream {
    int channel_id = 0;
    std::vector<std::uint64_t> tags_ps;
    // Parallel to tags_ps; diagnostic only, never serialized.
    std::vector<TagOrigin> origins;

    std::size_t size() const { return tags_ps.size(); }
    bool is_sorted() const;
};

// CSV format: header "channel,tag_ps", one row per tag. A file may hold
// several channels.
void write_tags_csv(std::ostream& out, const std::vector<TagStream>& streams);
std::vector<TagStream> read_tags_csv(std::istream& in);

// Binary format: magic "TPT1" once, then per channel a little-endian
// u32 channel id, u64 tag count, and count u64 tags.
void write_tags_binary(std::ostream& out, const std::vector<TagStream>& streams);
std::vector<TagStream> read_tags_binary(std::istream& in);

void write_tags_csv_file(const std::string& path, const std::vector<TagStream>& streams);
std::vector<TagStream> read_tags_csv_file(const std::string& path);
void write_tags_binary_file(const std::string& path, const std::vector<TagStream>& streams);
std::vector<TagStream> read_tags_binary_file(const std::string& path);

}  // namespace spdclab
