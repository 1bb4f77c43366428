#include "scplus/segmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "scplus/error.hpp"

namespace scplus {

void SegmentationMap::validate() const {
    if (height <= 0 || width <= 0) throw ShapeError("segmentation map must have positive dimensions");
    if (values.size() != static_cast<std::size_t>(height) * width) throw ShapeError("segmentation map storage size mismatch");
    for (double v : values)
        if (!(v >= 0.0 && v <= 1.0)) throw ShapeError("segmentation map value outside [0, 1]");
    if (!(row_scale > 0.0 && col_scale > 0.0)) throw ShapeError("segmentation map cell scale must be positive");
}

void AffineCalib::validate() const {
    if (w.x() == 0.0 || w.y() == 0.0 || !w.allFinite() || !b.allFinite())
        throw ConfigError("calibration scale components must be finite and nonzero");
}

SegmentationMap pool_map(const Grid& raw, int out_height, int out_width) {
    if (raw.rows <= 0 || raw.cols <= 0) throw ShapeError("cannot pool an empty grid");
    if (out_height <= 0 || out_width <= 0) throw ShapeError("pooled dimensions must be positive");
    if (out_height > raw.rows || out_width > raw.cols)
        throw ShapeError("pooled size " + std::to_string(out_height) + "x" + std::to_string(out_width) +
                         " exceeds raw size " + std::to_string(raw.rows) + "x" + std::to_string(raw.cols));

    const int rstep = raw.rows / out_height;
    const int cstep = raw.cols / out_width;
    SegmentationMap out(out_height, out_width, 0.0, rstep, cstep);
    for (int i = 0; i < out_height; ++i) {
        const int r0 = i * rstep;
        const int r1 = (i == out_height - 1) ? raw.rows : r0 + rstep;
        for (int j = 0; j < out_width; ++j) {
            const int c0 = j * cstep;
            const int c1 = (j == out_width - 1) ? raw.cols : c0 + cstep;
            double sum = 0.0;
            for (int r = r0; r < r1; ++r)
                for (int c = c0; c < c1; ++c) sum += raw.at(r, c);
            out.at(i, j) = std::clamp(sum / static_cast<double>((r1 - r0) * (c1 - c0)), 0.0, 1.0);
        }
    }
    return out;
}

double calibration_residual(const AffineCalib& calib, std::span<const CalibPair> pairs) {
    if (pairs.empty()) return 0.0;
    double sse = 0.0;
    for (const auto& p : pairs) sse += (calib.to_pixel(p.scene) - p.pixel).squaredNorm();
    return std::sqrt(sse / static_cast<double>(pairs.size()));
}

CalibFit fit_calibration(std::span<const CalibPair> pairs) {
    if (pairs.size() < 2) throw RankDeficiencyError("calibration needs at least 2 correspondence pairs");

    const double n = static_cast<double>(pairs.size());
    CalibFit fit;
    for (int axis = 0; axis < 2; ++axis) {
        double ms = 0.0, mp = 0.0;
        for (const auto& p : pairs) {
            ms += p.scene[axis];
            mp += p.pixel[axis];
        }
        ms /= n;
        mp /= n;
        double sxx = 0.0, sxy = 0.0;
        for (const auto& p : pairs) {
            const double ds = p.scene[axis] - ms;
            sxx += ds * ds;
            sxy += ds * (p.pixel[axis] - mp);
        }
        const char* name = axis == 0 ? "x" : "y";
        if (sxx == 0.0) throw RankDeficiencyError(std::string("all scene ") + name + " coordinates are equal");
        const double w = sxy / sxx;
        if (w == 0.0) throw RankDeficiencyError(std::string("pixel ") + name + " does not vary with scene " + name);
        fit.calib.w[axis] = w;
        fit.calib.b[axis] = mp - w * ms;
    }
    fit.residual_rms = calibration_residual(fit.calib, pairs);
    return fit;
}

BoxApplication apply_box(const SegmentationMap& map, const BoundingBox& box) {
    if (!(box.min.array() <= box.max.array()).all()) throw ShapeError("bounding box min must not exceed max");
    if (!(box.label >= 0.0 && box.label <= 1.0)) throw ShapeError("bounding box label must lie in [0, 1]");

    BoxApplication out{map, 0};
    for (int r = 0; r < map.height; ++r) {
        const double cy = (r + 0.5) * map.row_scale;
        if (cy < box.min.y() || cy > box.max.y()) continue;
        for (int c = 0; c < map.width; ++c) {
            const double cx = (c + 0.5) * map.col_scale;
            if (cx < box.min.x() || cx > box.max.x()) continue;
            out.map.at(r, c) = box.label;
            ++out.cells_covered;
        }
    }
    return out;
}

MapQuery query_map(const SegmentationMap& map, const Vec2& scene, const AffineCalib& calib) {
    const Vec2 px = calib.to_pixel(scene);
    const double fc = std::floor(px.x() / map.col_scale);
    const double fr = std::floor(px.y() / map.row_scale);
    MapQuery q;
    auto clampi = [&](double v, int hi) {
        if (!(v >= 0.0)) {  // also catches NaN
            q.clamped = true;
            return 0;
        }
        if (v > hi) {
            q.clamped = true;
            return hi;
        }
        return static_cast<int>(v);
    };
    const int c = clampi(fc, map.width - 1);
    const int r = clampi(fr, map.height - 1);
    q.weight = map.at(r, c);
    return q;
}

std::uint8_t quantize_weight(double w) noexcept {
    return static_cast<std::uint8_t>(std::lround(std::clamp(w, 0.0, 1.0) * 255.0));
}

void write_pgm(const std::filesystem::path& path, const SegmentationMap& map) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NotFoundError("cannot write map file '" + path.string() + "'");
    std::ostringstream header;
    header << "P5\n# pixels_per_cell " << map.row_scale << ' ' << map.col_scale << '\n'
           << map.width << ' ' << map.height << "\n255\n";
    out << header.str();
    std::vector<char> bytes(map.values.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<char>(quantize_weight(map.values[i]));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

SegmentationMap read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot open map file '" + path.string() + "'");

    double row_scale = 1.0, col_scale = 1.0;
    std::vector<long> header;
    std::string magic;
    in >> magic;
    if (magic != "P5") throw ParseError(1, "map file is not a binary PGM (P5)");
    while (header.size() < 3) {
        in >> std::ws;
        if (in.peek() == '#') {
            std::string comment;
            std::getline(in, comment);
            std::istringstream cs(comment.substr(1));
            std::string key;
            if (cs >> key && key == "pixels_per_cell") cs >> row_scale >> col_scale;
            continue;
        }
        long v = 0;
        if (!(in >> v)) throw ParseError(1, "truncated PGM header");
        header.push_back(v);
    }
    in.get();  // single whitespace before the raster
    const long width = header[0], height = header[1], maxval = header[2];
    if (width <= 0 || height <= 0 || maxval != 255) throw ParseError(1, "unsupported PGM geometry or maxval");

    SegmentationMap map(static_cast<int>(height), static_cast<int>(width), 0.0, row_scale, col_scale);
    std::vector<char> bytes(map.values.size());
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw ParseError(1, "truncated PGM raster");
    for (std::size_t i = 0; i < bytes.size(); ++i)
        map.values[i] = static_cast<unsigned char>(bytes[i]) / 255.0;
    return map;
}

std::vector<int> run_length_encode(const SegmentationMap& map) {
    std::vector<int> out;
    for (double v : map.values) {
        const int q = quantize_weight(v);
        if (!out.empty() && out[out.size() - 2] == q) {
            ++out.back();
        } else {
            out.push_back(q);
            out.push_back(1);
        }
    }
    return out;
}

std::vector<CalibPair> read_calib_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open correspondence file '" + path.string() + "'");
    std::vector<CalibPair> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        double v[4];
        int n = 0;
        while (n < 4 && fields >> v[n]) ++n;
        if (n != 4) {
            if (lineno == 1 && pairs.empty()) continue;  // header row sx,sy,px,py
            throw ParseError(lineno, "expected 'sx,sy,px,py'");
        }
        pairs.push_back({Vec2(v[0], v[1]), Vec2(v[2], v[3])});
    }
    return pairs;
}

}  // namespace scplus
