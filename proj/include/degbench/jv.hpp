#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace degbench {

// Raw sweeps record photocurrent as negative current density; some lab
// files flip the sign. Extraction works on magnitudes either way.
enum class PhotocurrentSign { negative, positive };

struct JVCurve {
    std::vector<double> voltage;          // V, strictly increasing
    std::vector<double> current_density;  // mA/cm^2
    double irradiance = 100.0;            // G, mW/cm^2
};

struct CellParams {
    double jsc = 0;   // mA/cm^2
    double voc = 0;   // V
    double pmpp = 0;  // mW/cm^2
    double vmpp = 0;  // V at the maximum power point
    double ff = 0;
    double pce = 0;   // fraction; multiply by 100 for %
};

// jsc and voc by linear interpolation; pmpp is the exact maximum of the power
// of the piecewise-linear J(V) interpolant on [0, voc]. Each segment's power
// is a parabola, so the refinement is closed form and is unaffected by
// inserting collinear samples.
CellParams extract_params(const JVCurve& curve,
                          PhotocurrentSign sign = PhotocurrentSign::negative);

JVCurve parse_jv_csv(const std::string& text, double irradiance);
JVCurve load_jv_csv(const std::filesystem::path& path, double irradiance);

struct JVRecord {
    std::string cell;
    double day = 0;
    CellParams params;
};

// Every `<cell>_<day>.csv` in `dir`, sorted by (cell, day).
std::vector<JVRecord> extract_directory(const std::filesystem::path& dir, double irradiance,
                                        PhotocurrentSign sign = PhotocurrentSign::negative);

std::string jv_records_csv(const std::vector<JVRecord>& records);

}  // namespace degbench
