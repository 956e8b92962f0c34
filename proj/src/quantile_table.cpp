#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "fracinv/errors.hpp"
#include "fracinv/fbm.hpp"
#include "fracinv/parallel.hpp"
#include "fracinv/series_io.hpp"

namespace fracinv {

namespace {

constexpr const char* kMagic = "FRACINV-QTABLE";

std::string d_tag(double d) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%+.6f", d == 0.0 ? 0.0 : d);
    return buf;
}

std::string table_prefix(Functional f, ProcessKind kind, double d, std::size_t m) {
    return to_string(f) + "_" + to_string(kind) + "_d" + d_tag(d) + "_m" + std::to_string(m) + "_";
}

template <class T>
T parse_number(const std::string& text, const std::string& key) {
    T v{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw FormatError("quantile table: header field '" + key + "' is not a number: '" + text +
                          "'");
    }
    return v;
}

struct ParsedHeader {
    QuantileTable table;
    std::size_t data_offset = 0;
};

ParsedHeader parse_header(const std::string& data) {
    ParsedHeader out;
    std::size_t pos = 0;
    auto next_line = [&]() -> std::string {
        const auto nl = data.find('\n', pos);
        if (nl == std::string::npos) throw FormatError("quantile table: truncated header");
        std::string line = data.substr(pos, nl - pos);
        pos = nl + 1;
        return line;
    };
    if (next_line() != kMagic) throw FormatError("quantile table: bad magic line");
    std::map<std::string, std::string> fields;
    for (;;) {
        const std::string line = next_line();
        if (line == "end") break;
        const auto space = line.find(' ');
        if (space == std::string::npos) {
            throw FormatError("quantile table: malformed header line '" + line + "'");
        }
        fields[line.substr(0, space)] = line.substr(space + 1);
    }
    auto field = [&](const std::string& key) -> const std::string& {
        const auto it = fields.find(key);
        if (it == fields.end()) throw FormatError("quantile table: missing header field '" + key + "'");
        return it->second;
    };
    const int version = parse_number<int>(field("format_version"), "format_version");
    if (version != kTableFormatVersion) {
        throw FormatError("quantile table: unsupported format_version " + std::to_string(version));
    }
    if (field("data") != "float64-le") throw FormatError("quantile table: unsupported data encoding");
    auto& t = out.table;
    t.functional = functional_from_string(field("functional"));
    t.kind = kind_from_string(field("kind"));
    t.d = parse_number<double>(field("d"), "d");
    t.m = parse_number<std::size_t>(field("m"), "m");
    t.reps = parse_number<std::size_t>(field("reps"), "reps");
    t.seed = parse_number<std::uint64_t>(field("seed"), "seed");
    out.data_offset = pos;
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open quantile table '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string to_string(Functional f) {
    switch (f) {
        case Functional::RangeOfBridge: return "range-of-bridge";
        case Functional::SupOfBridge: return "sup-of-bridge";
        case Functional::IntSqBridge: return "int-sq-bridge";
        case Functional::TerminalValue: return "terminal";
    }
    return "unknown";
}

Functional functional_from_string(const std::string& s) {
    for (auto f : {Functional::RangeOfBridge, Functional::SupOfBridge, Functional::IntSqBridge,
                   Functional::TerminalValue}) {
        if (s == to_string(f)) return f;
    }
    throw DomainError("unknown functional '" + s +
                      "' (valid: range-of-bridge, sup-of-bridge, int-sq-bridge, terminal)");
}

std::string to_string(ProcessKind k) { return k == ProcessKind::TypeI ? "type1" : "type2"; }

ProcessKind kind_from_string(const std::string& s) {
    if (s == "type1" || s == "I" || s == "typeI") return ProcessKind::TypeI;
    if (s == "type2" || s == "II" || s == "typeII") return ProcessKind::TypeII;
    throw DomainError("unknown process kind '" + s + "' (valid: type1, type2)");
}

double select(const PathFunctionals& f, Functional which) {
    switch (which) {
        case Functional::RangeOfBridge: return f.range;
        case Functional::SupOfBridge: return f.sup;
        case Functional::IntSqBridge: return f.int_sq_bridge;
        case Functional::TerminalValue: return f.terminal;
    }
    return 0.0;
}

std::string QuantileTable::id() const {
    return table_prefix(functional, kind, d, m) + "r" + std::to_string(reps) + "_s" +
           std::to_string(seed);
}

double QuantileTable::mean() const {
    double acc = 0.0;
    for (double v : samples) acc += v;
    return samples.empty() ? 0.0 : acc / static_cast<double>(samples.size());
}

double QuantileTable::quantile(double p) const {
    if (samples.empty()) return 0.0;
    const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(samples.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, samples.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return samples[lo] * (1.0 - w) + samples[hi] * w;
}

std::vector<QuantileTable> build_quantile_tables(std::span<const Functional> functionals,
                                                 ProcessKind kind, double d, std::size_t m,
                                                 std::size_t reps, std::uint64_t seed,
                                                 std::size_t threads) {
    if (reps < 1000) throw DomainError("build_quantile_table: reps must be >= 1000");
    std::vector<PathFunctionals> values(reps);
    if (kind == ProcessKind::TypeI) {
        const Type1FbmSampler sampler(d, m);
        parallel_for(reps, threads, [&](std::size_t r) {
            Rng rng = make_rng(derive_seed(seed, r));
            values[r] = path_functionals(sampler.sample(rng));
        });
    } else {
        const Type2FbmSampler sampler(d, m);
        parallel_for(reps, threads, [&](std::size_t r) {
            Rng rng = make_rng(derive_seed(seed, r));
            values[r] = path_functionals(sampler.sample(rng));
        });
    }
    std::vector<QuantileTable> tables;
    for (auto f : functionals) {
        QuantileTable t{f, kind, d, m, reps, seed, std::vector<double>(reps)};
        for (std::size_t r = 0; r < reps; ++r) t.samples[r] = select(values[r], f);
        std::sort(t.samples.begin(), t.samples.end());
        tables.push_back(std::move(t));
    }
    return tables;
}

QuantileTable build_quantile_table(Functional functional, ProcessKind kind, double d,
                                   std::size_t m, std::size_t reps, std::uint64_t seed,
                                   std::size_t threads) {
    const Functional one[] = {functional};
    return std::move(build_quantile_tables(one, kind, d, m, reps, seed, threads).front());
}

void write_table(const QuantileTable& table, const std::filesystem::path& path) {
    std::string data = std::string(kMagic) + "\n";
    data += "format_version " + std::to_string(kTableFormatVersion) + "\n";
    data += "functional " + to_string(table.functional) + "\n";
    data += "kind " + to_string(table.kind) + "\n";
    data += "d " + format_double(table.d) + "\n";
    data += "m " + std::to_string(table.m) + "\n";
    data += "reps " + std::to_string(table.reps) + "\n";
    data += "seed " + std::to_string(table.seed) + "\n";
    data += "data float64-le\n";
    data += "end\n";
    for (double v : table.samples) detail::put_le_u64(data, std::bit_cast<std::uint64_t>(v));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

QuantileTable read_table(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    auto parsed = parse_header(data);
    auto& t = parsed.table;
    const std::size_t payload = data.size() - parsed.data_offset;
    if (payload != 8 * t.reps) {
        throw FormatError("quantile table: payload holds " + std::to_string(payload) +
                          " bytes but header declares reps = " + std::to_string(t.reps));
    }
    t.samples.resize(t.reps);
    const auto* bytes = reinterpret_cast<const unsigned char*>(data.data() + parsed.data_offset);
    for (std::size_t i = 0; i < t.reps; ++i) {
        t.samples[i] = std::bit_cast<double>(detail::get_le_u64(bytes + 8 * i));
    }
    if (!std::is_sorted(t.samples.begin(), t.samples.end())) {
        throw FormatError("quantile table: samples are not sorted ascending");
    }
    if (t.reps == 0) throw FormatError("quantile table: empty sample");
    return t;
}

std::filesystem::path save_table(const QuantileTable& table, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto path = dir / (table.id() + ".qtab");
    write_table(table, path);
    return path;
}

std::optional<std::filesystem::path> find_table(const std::filesystem::path& dir,
                                                Functional functional, ProcessKind kind, double d,
                                                std::size_t m) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) return std::nullopt;
    const std::string prefix = table_prefix(functional, kind, d, m);
    std::optional<std::filesystem::path> best;
    std::size_t best_reps = 0;
    std::vector<std::filesystem::path> candidates;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (entry.path().extension() == ".qtab" && name.starts_with(prefix)) {
            candidates.push_back(entry.path());
        }
    }
    std::sort(candidates.begin(), candidates.end());
    for (const auto& path : candidates) {
        const auto header = parse_header(read_file(path)).table;
        if (header.functional != functional || header.kind != kind || header.m != m ||
            std::abs(header.d - d) > 1e-12) {
            continue;
        }
        if (!best || header.reps > best_reps) {
            best = path;
            best_reps = header.reps;
        }
    }
    return best;
}

QuantileTable load_or_build_table(const std::filesystem::path& dir, Functional functional,
                                  ProcessKind kind, double d, std::size_t m, std::size_t reps,
                                  std::uint64_t seed, bool build_missing, std::size_t threads) {
    if (const auto found = find_table(dir, functional, kind, d, m)) return read_table(*found);
    if (!build_missing) {
        throw MissingTableError("no quantile table for " + table_prefix(functional, kind, d, m) +
                                "* in '" + dir.string() + "' (build it with `fracinv tables` or " +
                                "pass --build-missing)");
    }
    auto table = build_quantile_table(functional, kind, d, m, reps, seed, threads);
    save_table(table, dir);
    return table;
}

double pvalue_from_table(const QuantileTable& table, double observed) {
    if (table.samples.empty()) throw EmptyInputError("pvalue_from_table: empty table");
    const auto it = std::lower_bound(table.samples.begin(), table.samples.end(), observed);
    const auto at_least = static_cast<double>(std::distance(it, table.samples.end()));
    return (1.0 + at_least) / (static_cast<double>(table.samples.size()) + 1.0);
}

}  // namespace fracinv
