// SPDX-License-Identifier: Apache-2.0

#include "radtrack/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace radtrack {

namespace {

constexpr char kMagic[8] = {'R', 'T', 'R', 'K', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

[[noreturn]] void io_fail(const std::string& path, const std::string& what) {
    throw std::runtime_error("checkpoint " + path + ": " + what);
}

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path, const char* what) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) io_fail(path, std::string("truncated while reading ") + what);
    return value;
}

} // namespace

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& entries) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) io_fail(path, "cannot open for writing");
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kVersion);
    write_pod(out, static_cast<uint64_t>(entries.size()));
    for (const NamedTensor& e : entries) {
        write_pod(out, static_cast<uint32_t>(e.name.size()));
        out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        const auto& shape = e.tensor.shape();
        write_pod(out, static_cast<uint32_t>(shape.size()));
        for (int d : shape) write_pod(out, static_cast<uint64_t>(d));
        out.write(reinterpret_cast<const char*>(e.tensor.data()),
                  static_cast<std::streamsize>(e.tensor.numel() * sizeof(double)));
    }
    if (!out) io_fail(path, "write failed");
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) io_fail(path, "cannot open for reading");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) io_fail(path, "bad magic");
    const uint32_t version = read_pod<uint32_t>(in, path, "version");
    if (version != kVersion) io_fail(path, "unsupported version " + std::to_string(version));
    const uint64_t count = read_pod<uint64_t>(in, path, "entry count");
    std::vector<NamedTensor> entries;
    entries.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        const uint32_t name_len = read_pod<uint32_t>(in, path, "name length");
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) io_fail(path, "truncated while reading entry name");
        const uint32_t rank = read_pod<uint32_t>(in, path, "rank");
        std::vector<int> shape(rank);
        int64_t numel = 1;
        for (uint32_t d = 0; d < rank; ++d) {
            const uint64_t extent = read_pod<uint64_t>(in, path, "extent");
            shape[d] = static_cast<int>(extent);
            numel *= shape[d];
        }
        std::vector<double> values(static_cast<size_t>(numel));
        in.read(reinterpret_cast<char*>(values.data()),
                static_cast<std::streamsize>(values.size() * sizeof(double)));
        if (!in) io_fail(path, "truncated while reading data for '" + name + "'");
        entries.push_back({std::move(name), Tensor::from_vector(shape, std::move(values))});
    }
    return entries;
}

} // namespace radtrack
