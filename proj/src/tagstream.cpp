#include "spdclab/tagstream.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace spdclab {

namespace {

void fail_io(const std::string& what) { throw std::runtime_error(what); }

template <typename T>
void write_le(std::ostream& out, T value) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i)
        buf[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
bool read_le(std::istream& in, T& value) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) return false;
    value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        value |= static_cast<T>(buf[i]) << (8 * i);
    return true;
}

}  // namespace

bool TagStream::is_sorted() const {
    return std::is_sorted(tags_ps.begin(), tags_ps.end());
}

void write_tags_csv(std::ostream& out, const std::vector<TagStream>& streams) {
    out << "channel,tag_ps\n";
    for (const auto& s : streams)
        for (std::uint64_t t : s.tags_ps) out << s.channel_id << ',' << t << '\n';
}

std::vector<TagStream> read_tags_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) fail_io("tag csv: empty file");
    if (line != "channel,tag_ps" && line != "channel,tag_ps\r")
        fail_io("tag csv: bad header: " + line);
    std::map<int, TagStream> by_channel;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) fail_io("tag csv: bad row: " + line);
        const int ch = std::stoi(line.substr(0, comma));
        const std::uint64_t tag = std::stoull(line.substr(comma + 1));
        auto& s = by_channel[ch];
        s.channel_id = ch;
        s.tags_ps.push_back(tag);
    }
    std::vector<TagStream> out;
    out.reserve(by_channel.size());
    for (auto& [ch, s] : by_channel) out.push_back(std::move(s));
    return out;
}

void write_tags_binary(std::ostream& out, const std::vector<TagStream>& streams) {
    out.write("TPT1", 4);
    for (const auto& s : streams) {
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.channel_id));
        write_le<std::uint64_t>(out, s.tags_ps.size());
        for (std::uint64_t t : s.tags_ps) write_le<std::uint64_t>(out, t);
    }
}

std::vector<TagStream> read_tags_binary(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "TPT1", 4) != 0)
        fail_io("tag binary: bad magic");
    std::vector<TagStream> out;
    std::uint32_t channel = 0;
    while (read_le<std::uint32_t>(in, channel)) {
        std::uint64_t count = 0;
        if (!read_le<std::uint64_t>(in, count)) fail_io("tag binary: truncated header");
        TagStream s;
        s.channel_id = static_cast<int>(channel);
        s.tags_ps.resize(count);
        for (std::uint64_t i = 0; i < count; ++i)
            if (!read_le<std::uint64_t>(in, s.tags_ps[i]))
                fail_io("tag binary: truncated tags");
        out.push_back(std::move(s));
    }
    return out;
}

void write_tags_csv_file(const std::string& path, const std::vector<TagStream>& streams) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail_io("cannot open for writing: " + path);
    write_tags_csv(f, streams);
    if (!f) fail_io("write failed: " + path);
}

std::vector<TagStream> read_tags_csv_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail_io("cannot open: " + path);
    return read_tags_csv(f);
}

void write_tags_binary_file(const std::string& path, const std::vector<TagStream>& streams) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail_io("cannot open for writing: " + path);
    write_tags_binary(f, streams);
    if (!f) fail_io("write failed: " + path);
}

std::vector<TagStream> read_tags_binary_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail_io("cannot open: " + path);
    return read_tags_binary(f);
}

}  // namespace spdclab
