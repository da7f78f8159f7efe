#include "degbench/jv.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "common/text.hpp"
#include "degbench/error.hpp"

namespace degbench {

namespace {

void validate(const JVCurve& c) {
    if (c.voltage.size() != c.current_density.size())
        throw Error(ErrorKind::jv, "voltage and current density lengths differ");
    if (c.voltage.size() < 3) throw Error(ErrorKind::jv, "J-V curve needs at least 3 samples");
    if (!(c.irradiance > 0.0)) throw Error(ErrorKind::jv, "irradiance must be positive");
    for (std::size_t i = 1; i < c.voltage.size(); ++i)
        if (!(c.voltage[i] > c.voltage[i - 1]))
            throw Error(ErrorKind::jv, "voltage must be strictly increasing (sample " +
                                           std::to_string(i) + ")");
}

double lerp_at(double x0, double y0, double x1, double y1, double x) {
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

}  // namespace

CellParams extract_params(const JVCurve& curve, PhotocurrentSign sign) {
    validate(curve);
    const auto& v = curve.voltage;
    const double flip = sign == PhotocurrentSign::negative ? -1.0 : 1.0;
    std::vector<double> j(curve.current_density.size());
    for (std::size_t i = 0; i < j.size(); ++i) j[i] = flip * curve.current_density[i];

    if (v.front() > 0.0 || v.back() < 0.0)
        throw Error(ErrorKind::jv, "voltage range does not include or bracket V = 0");

    // Short-circuit: exact sample if present, else interpolate the bracket.
    std::size_t k0 = 0;
    while (k0 + 1 < v.size() && v[k0 + 1] <= 0.0) ++k0;
    const double jsc = v[k0] == 0.0 ? j[k0] : lerp_at(v[k0], j[k0], v[k0 + 1], j[k0 + 1], 0.0);
    if (!(jsc > 0.0))
        throw Error(ErrorKind::jv, "no power-producing quadrant: photocurrent at V = 0 is " +
                                       detail::format_double(flip * jsc));

    // Open circuit: first sign change of the photocurrent beyond V = 0.
    double voc = -1.0;
    std::size_t last_inside = k0;
    for (std::size_t i = k0; i + 1 < v.size(); ++i) {
        if (v[i + 1] <= 0.0) continue;
        if (j[i] > 0.0 && j[i + 1] <= 0.0) {
            voc = j[i + 1] == 0.0 ? v[i + 1] : lerp_at(j[i], v[i], j[i + 1], v[i + 1], 0.0);
            last_inside = i;
            break;
        }
    }
    if (voc < 0.0)
        throw Error(ErrorKind::jv,
                    "no zero crossing of J within the sweep (degraded or dead cell)");
    if (!(voc > 0.0)) throw Error(ErrorKind::jv, "no power-producing quadrant: Voc <= 0");

    // Polyline of the interpolant restricted to [0, voc].
    std::vector<std::pair<double, double>> pts{{0.0, jsc}};
    for (std::size_t i = k0; i <= last_inside; ++i)
        if (v[i] > 0.0 && v[i] < voc) pts.emplace_back(v[i], j[i]);
    pts.emplace_back(voc, 0.0);

    double pmpp = 0.0, vmpp = 0.0;
    auto consider = [&](double vv, double pp) {
        if (pp > pmpp) {
            pmpp = pp;
            vmpp = vv;
        }
    };
    for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
        const auto [v0, j0] = pts[s];
        const auto [v1, j1] = pts[s + 1];
        consider(v0, v0 * j0);
        consider(v1, v1 * j1);
        const double slope = (j1 - j0) / (v1 - v0);
        if (slope < 0.0) {
            // P(v) = v * (j0 + slope * (v - v0)); vertex of the parabola.
            const double vstar = -(j0 - slope * v0) / (2.0 * slope);
            if (vstar > v0 && vstar < v1) consider(vstar, vstar * (j0 + slope * (vstar - v0)));
        }
    }

    CellParams p;
    p.jsc = jsc;
    p.voc = voc;
    p.pmpp = pmpp;
    p.vmpp = vmpp;
    p.ff = pmpp / (jsc * voc);
    p.pce = pmpp / curve.irradiance;
    return p;
}

JVCurve parse_jv_csv(const std::string& text, double irradiance) {
    JVCurve c;
    c.irradiance = irradiance;
    std::size_t lineno = 0;
    for (const auto& raw : detail::split(text, '\n')) {
        ++lineno;
        auto line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto fields = detail::split(line, ',');
        if (fields.size() < 2)
            throw Error(ErrorKind::parse, "J-V line " + std::to_string(lineno) + ": need 2 columns");
        auto volt = detail::parse_double(detail::trim(fields[0]));
        auto cur = detail::parse_double(detail::trim(fields[1]));
        if (!volt || !cur) {
            if (c.voltage.empty() && lineno == 1) continue;  // header
            throw Error(ErrorKind::parse, "J-V line " + std::to_string(lineno) + ": non-numeric value");
        }
        c.voltage.push_back(*volt);
        c.current_density.push_back(*cur);
    }
    return c;
}

JVCurve load_jv_csv(const std::filesystem::path& path, double irradiance) {
    return parse_jv_csv(detail::read_file(path), irradiance);
}

std::vector<JVRecord> extract_directory(const std::filesystem::path& dir, double irradiance,
                                        PhotocurrentSign sign) {
    if (!std::filesystem::is_directory(dir))
        throw Error(ErrorKind::io, "'" + dir.string() + "' is not a directory");
    static const std::regex pattern(R"((.+)_([0-9]+(?:\.[0-9]+)?)\.csv)");
    std::vector<JVRecord> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto name = entry.path().filename().string();
        std::smatch m;
        if (!std::regex_match(name, m, pattern)) continue;
        JVRecord rec;
        rec.cell = m[1].str();
        rec.day = *detail::parse_double(m[2].str());
        try {
            rec.params = extract_params(load_jv_csv(entry.path(), irradiance), sign);
        } catch (const Error& e) {
            throw Error(e.kind(), name + ": " + e.what());
        }
        out.push_back(std::move(rec));
    }
    std::sort(out.begin(), out.end(), [](const JVRecord& a, const JVRecord& b) {
        return a.cell != b.cell ? a.cell < b.cell : a.day < b.day;
    });
    return out;
}

std::string jv_records_csv(const std::vector<JVRecord>& records) {
    std::string out = "cell,day,jsc,voc,pmpp,vmpp,ff,pce\n";
    for (const auto& r : records) {
        const auto& p = r.params;
        out += r.cell + "," + detail::format_double(r.day) + "," + detail::format_double(p.jsc) + "," +
               detail::format_double(p.voc) + "," + detail::format_double(p.pmpp) + "," +
               detail::format_double(p.vmpp) + "," + detail::format_double(p.ff) + "," +
               detail::format_double(p.pce) + "\n";
    }
    return out;
}

}  // namespace degbench
