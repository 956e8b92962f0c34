#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fracinv {

enum class SeriesFormat { Csv, Binary };

/// Csv for ".csv" (or anything unrecognized), Binary for ".bin"/".f64".
SeriesFormat format_from_path(const std::filesystem::path& path);

// CSV: header line `value`, then one number per line.
// Binary: uint64 little-endian length, then that many little-endian float64.
void write_series(const std::filesystem::path& path, std::span<const double> values,
                  SeriesFormat format);
std::vector<double> read_series(const std::filesystem::path& path, SeriesFormat format);

inline void write_series(const std::filesystem::path& path, std::span<const double> values) {
    write_series(path, values, format_from_path(path));
}
inline std::vector<double> read_series(const std::filesystem::path& path) {
    return read_series(path, format_from_path(path));
}

/// Shortest text that parses back to exactly the same double.
std::string format_double(double x);

namespace detail {
void put_le_u64(std::string& out, std::uint64_t v);
std::uint64_t get_le_u64(const unsigned char* p);
}  // namespace detail

}  // namespace fracinv
