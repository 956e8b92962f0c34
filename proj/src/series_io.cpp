#include "fracinv/series_io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>

#include "fracinv/errors.hpp"

namespace fracinv {

namespace detail {

void put_le_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

std::uint64_t get_le_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace detail

SeriesFormat format_from_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".bin" || ext == ".f64") return SeriesFormat::Binary;
    return SeriesFormat::Csv;
}

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void write_series(const std::filesystem::path& path, std::span<const double> values,
                  SeriesFormat format) {
    std::string data;
    if (format == SeriesFormat::Csv) {
        data = "value\n";
        for (double v : values) {
            data += format_double(v);
            data += '\n';
        }
    } else {
        data.reserve(8 * (values.size() + 1));
        detail::put_le_u64(data, values.size());
        for (double v : values) detail::put_le_u64(data, std::bit_cast<std::uint64_t>(v));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

std::vector<double> read_series(const std::filesystem::path& path, SeriesFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open series file '" + path.string() + "'");
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<double> values;

    if (format == SeriesFormat::Binary) {
        if (data.size() < 8) throw FormatError("binary series: missing 8-byte length prefix");
        const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
        const std::uint64_t n = detail::get_le_u64(bytes);
        if (data.size() != 8 + 8 * n) {
            throw FormatError("binary series: length prefix " + std::to_string(n) +
                              " does not match file size " + std::to_string(data.size()));
        }
        values.resize(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            values[i] = std::bit_cast<double>(detail::get_le_u64(bytes + 8 * (i + 1)));
        }
        return values;
    }

    std::istringstream lines(data);
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(lines, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!header_seen) {
            header_seen = true;
            if (line == "value") continue;
        }
        double v = 0.0;
        const auto* first = line.data();
        const auto* last = line.data() + line.size();
        while (first < last && (*first == ' ' || *first == '\t')) ++first;
        const auto res = std::from_chars(first, last, v);
        if (res.ec != std::errc{} || res.ptr != last) {
            throw FormatError("CSV series: line " + std::to_string(line_no) + " is not a number: '" +
                              line + "'");
        }
        values.push_back(v);
    }
    return values;
}

}  // namespace fracinv
