#pragma once

#include "kdsm/model.hpp"

#include <string>
#include <vector>

namespace kdsm {

/// 17-significant-digit decimal rendering; round-trips doubles exactly.
std::string format_double(double v);

/// CSV with one header row; all cells are format_double output.
void write_csv(const std::string& path, const Matrix& X,
               const std::vector<std::string>& columns);

struct CsvData {
    std::vector<std::string> columns;
    Matrix values;
};

CsvData read_csv(const std::string& path);

std::string base64_encode(const double* data, std::size_t count);
std::vector<double> base64_decode(const std::string& text);

/// Model file round-trip, schema "kdsm-model/1". W, phases, and coefficients
/// are base64 of little-endian 64-bit floats.
std::string model_to_json(const DensityModel& model);
DensityModel model_from_json(const std::string& text);

void save_model(const std::string& path, const DensityModel& model);
DensityModel load_model(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace kdsm
