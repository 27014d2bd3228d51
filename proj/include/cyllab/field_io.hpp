#pragma once

#include <filesystem>

#include <json.hpp>

#include "cyllab/cylinder.hpp"

namespace cyllab {

/// Grid metadata written as the JSON header of a field file.
nlohmann::json field_header(const SpectralField& u, const std::string& table_name);

/// Writes `<stem>.json` (header) and `<stem>.csv` (columns s_index, mode_k,
/// component, re, im). Rows for zero coefficients are omitted.
void write_field(const SpectralField& u, const std::filesystem::path& header_path);

/// Reads a field from its JSON header; the table path is resolved relative
/// to the header's directory.
SpectralField read_field(const std::filesystem::path& header_path);

}  // namespace cyllab
