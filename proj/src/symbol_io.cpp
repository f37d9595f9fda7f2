#include "rieffel/symbol_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rieffel {

namespace {

template <typename T>
void put(std::string& out, T v) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    // Little-endian on disk; hosts here are little-endian but keep it explicit.
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    out.append(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T take(const std::string& in, size_t& off, const char* what) {
    if (off + sizeof(T) > in.size())
        throw ParseError(std::string("truncated ") + what + " at byte offset " + std::to_string(off));
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, in.data() + off, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    off += sizeof(T);
    return v;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void dump(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

std::string encode_rsym(const Field& f) {
    const Grid& g = f.grid();
    if (!g.is_cube()) throw GridMismatchError("RSYM1 stores cubic grids only");
    if (f.rows() != f.cols()) throw GridMismatchError("RSYM1 stores square matrix entries");
    std::string out = "RSYM";
    put<uint32_t>(out, 1);
    put<uint8_t>(out, static_cast<uint8_t>(g.n));
    put<uint16_t>(out, static_cast<uint16_t>(f.rows()));
    put<uint32_t>(out, static_cast<uint32_t>(g.N[0]));
    put<double>(out, g.L[0]);
    for (long p = 0; p < g.size(); ++p)
        for (int r = 0; r < f.rows(); ++r)
            for (int c = 0; c < f.cols(); ++c) {
                put<double>(out, f(r, c, p).real());
                put<double>(out, f(r, c, p).imag());
            }
    return out;
}

Field decode_rsym(const std::string& in) {
    if (in.size() < 4 || in.compare(0, 4, "RSYM") != 0) throw ParseError("bad magic at byte offset 0");
    size_t off = 4;
    auto version = take<uint32_t>(in, off, "version");
    if (version != 1) throw ParseError("unsupported version " + std::to_string(version) + " at byte offset 4");
    size_t at = off;
    auto n = take<uint8_t>(in, off, "n");
    if (n < 1 || n > 2) throw ParseError("dimension must be 1 or 2 at byte offset " + std::to_string(at));
    at = off;
    auto k = take<uint16_t>(in, off, "k");
    if (k < 1) throw ParseError("k must be positive at byte offset " + std::to_string(at));
    at = off;
    auto N = take<uint32_t>(in, off, "N");
    if (N < 2 || (N & (N - 1)) != 0)
        throw ParseError("N must be a power of two at byte offset " + std::to_string(at));
    at = off;
    auto L = take<double>(in, off, "L");
    if (!(L > 0.0) || !std::isfinite(L)) throw ParseError("L must be positive at byte offset " + std::to_string(at));
    Grid g = Grid::cube(n, static_cast<int>(N), L);
    size_t need = off + static_cast<size_t>(g.size()) * k * k * 16;
    if (in.size() < need)
        throw ParseError("truncated samples: expected " + std::to_string(need) + " bytes, file ends at byte offset " +
                         std::to_string(in.size()));
    if (in.size() > need) throw ParseError("trailing data at byte offset " + std::to_string(need));
    Field f(g, k, k);
    for (long p = 0; p < g.size(); ++p)
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < k; ++c) {
                double re = take<double>(in, off, "sample");
                double im = take<double>(in, off, "sample");
                f(r, c, p) = cplx(re, im);
            }
    return f;
}

void write_rsym(const std::string& path, const Field& f) { dump(path, encode_rsym(f)); }

Field read_rsym(const std::string& path) { return decode_rsym(slurp(path)); }

nlohmann::json matrix_to_json(const MatrixElement& m) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back({m(r, c).real(), m(r, c).imag()});
    return arr;
}

MatrixElement matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw ParseError("matrix must be a non-empty array of [re, im] pairs");
    auto k = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(j.size()))));
    if (k * k != static_cast<Eigen::Index>(j.size())) throw ParseError("matrix entry count is not a square");
    MatrixElement m(k, k);
    for (Eigen::Index i = 0; i < k * k; ++i) {
        const auto& e = j[static_cast<size_t>(i)];
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw ParseError("matrix entry " + std::to_string(i) + " is not a [re, im] pair");
        m(i / k, i % k) = cplx(e[0].get<double>(), e[1].get<double>());
    }
    return m;
}

nlohmann::json plane_wave_to_json(const PlaneWaveSymbol& f) {
    nlohmann::json j;
    j["n"] = f.n;
    j["L"] = f.L;
    j["terms"] = nlohmann::json::array();
    for (const auto& [m, c] : f.terms) j["terms"].push_back({{"m", m}, {"coeff", matrix_to_json(c)}});
    return j;
}

PlaneWaveSymbol plane_wave_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("n") || !j.contains("L") || !j.contains("terms"))
        throw ParseError("plane-wave JSON needs n, L and terms");
    int n = j["n"].get<int>();
    double L = j["L"].get<double>();
    if (n < 1 || !(L > 0.0)) throw ParseError("plane-wave JSON has invalid n or L");
    const auto& terms = j["terms"];
    if (!terms.is_array()) throw ParseError("terms must be an array");
    int k = 1;
    if (!terms.empty()) k = static_cast<int>(matrix_from_json(terms[0].at("coeff")).rows());
    PlaneWaveSymbol f(n, L, k);
    for (size_t t = 0; t < terms.size(); ++t) {
        const auto& term = terms[t];
        if (!term.contains("m") || !term.contains("coeff")) throw ParseError("term " + std::to_string(t) + " lacks m or coeff");
        auto m = term["m"].get<std::vector<int>>();
        if (static_cast<int>(m.size()) != n) throw ParseError("term " + std::to_string(t) + " has wrong frequency length");
        MatrixElement c = matrix_from_json(term["coeff"]);
        if (c.rows() != k) throw ParseError("term " + std::to_string(t) + " has inconsistent matrix size");
        f.add(m, c);
    }
    return f;
}

void write_plane_wave(const std::string& path, const PlaneWaveSymbol& f) {
    dump(path, plane_wave_to_json(f).dump(2) + "\n");
}

PlaneWaveSymbol read_plane_wave(const std::string& path) {
    std::string text = slurp(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("JSON syntax error at byte offset ") + std::to_string(e.byte) + " in " + path);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("JSON error in ") + path + ": " + e.what());
    }
    try {
        return plane_wave_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("JSON content error in ") + path + ": " + e.what());
    }
}

AnySymbol load_symbol(const std::string& path) {
    std::string bytes = slurp(path);
    if (bytes.size() >= 4 && bytes.compare(0, 4, "RSYM") == 0) return decode_rsym(bytes);
    return read_plane_wave(path);
}

void save_symbol(const std::string& path, const AnySymbol& s) {
    if (auto* f = std::get_if<Field>(&s))
        write_rsym(path, *f);
    else
        write_plane_wave(path, std::get<PlaneWaveSymbol>(s));
}

}  // namespace rieffel
