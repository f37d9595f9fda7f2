/*
 * Symbol file formats: RSYM1 binary grids and plane-wave JSON.
 */
#pragma once

#include <string>
#include <variant>

#include "json.hpp"
#include "rieffel/symbols.hpp"

namespace rieffel {

void write_rsym(const std::string& path, const Field& f);
Field read_rsym(const std::string& path);
std::string encode_rsym(const Field& f);
Field decode_rsym(const std::string& bytes);

nlohmann::json matrix_to_json(const MatrixElement& m);
MatrixElement matrix_from_json(const nlohmann::json& j);

nlohmann::json plane_wave_to_json(const PlaneWaveSymbol& f);
PlaneWaveSymbol plane_wave_from_json(const nlohmann::json& j);
void write_plane_wave(const std::string& path, const PlaneWaveSymbol& f);
PlaneWaveSymbol read_plane_wave(const std::string& path);

using AnySymbol = std::variant<Field, PlaneWaveSymbol>;
// Dispatches on the leading magic bytes.
AnySymbol load_symbol(const std::string& path);
void save_symbol(const std::string& path, const AnySymbol& s);

}  // namespace rieffel
