#include "wdm/dataset.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "wdm/errors.hpp"

namespace wdm {

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;

double u8_to_signed(double v) {
    return v / 255.0 * 2.0 - 1.0;
}

std::uint32_t read_be_u32(std::istream& in, const char* what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in)
        throw ParseError(std::string("unexpected end of file while reading ") + what +
                         " at byte offset " + std::to_string(in.tellg()));
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

Dataset load_csv_points(const std::string& path, const LoadOptions& opts) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file: " + path);
    Dataset ds;
    std::string line;
    std::size_t lineno = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            try {
                std::size_t used = 0;
                double v = std::stod(field, &used);
                // allow trailing whitespace only
                for (std::size_t i = used; i < field.size(); ++i)
                    if (!std::isspace(static_cast<unsigned char>(field[i])))
                        throw std::invalid_argument(field);
                row.push_back(v);
            } catch (const std::exception&) {
                throw ParseError("malformed value '" + field + "' at " + path + ":" +
                                 std::to_string(lineno));
            }
        }
        if (row.empty())
            throw ParseError("empty row at " + path + ":" + std::to_string(lineno));
        if (width == 0) width = row.size();
        if (row.size() != width)
            throw ParseError("row width " + std::to_string(row.size()) + " differs from " +
                             std::to_string(width) + " at " + path + ":" +
                             std::to_string(lineno));
        ds.samples.push_back(std::move(row));
        if (opts.max_samples && ds.samples.size() >= opts.max_samples) break;
    }
    if (ds.samples.empty()) throw ParseError("dataset is empty: " + path);
    ds.sample_shape = {width};
    return ds;
}

Dataset load_raw_u8(const std::string& path, const LoadOptions& opts) {
    if (opts.raw_shape.size() != 2)
        throw ParameterError("raw-u8-images needs a (rows, cols) shape option");
    std::size_t rows = opts.raw_shape[0], cols = opts.raw_shape[1];
    std::size_t npix = rows * cols;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file: " + path);
    Dataset ds;
    ds.sample_shape = opts.raw_shape;
    std::vector<char> buf(npix);
    while (in.read(buf.data(), static_cast<std::streamsize>(npix))) {
        std::vector<double> img(npix);
        for (std::size_t i = 0; i < npix; ++i)
            img[i] = u8_to_signed(static_cast<double>(static_cast<unsigned char>(buf[i])));
        ds.samples.push_back(std::move(img));
        if (opts.max_samples && ds.samples.size() >= opts.max_samples) return ds;
    }
    if (in.gcount() != 0)
        throw ParseError("trailing partial image (" + std::to_string(in.gcount()) +
                         " bytes) in " + path);
    if (ds.samples.empty()) throw ParseError("dataset is empty: " + path);
    return ds;
}

Dataset load_idx(const std::string& path, const LoadOptions& opts) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file: " + path);
    std::uint32_t magic = read_be_u32(in, "IDX magic");
    if (magic != kIdxImageMagic) {
        std::ostringstream os;
        os << "bad IDX magic 0x" << std::hex << magic << " (expected 0x00000803) at byte offset 0";
        throw ParseError(os.str());
    }
    std::uint32_t count = read_be_u32(in, "IDX count");
    std::uint32_t rows = read_be_u32(in, "IDX rows");
    std::uint32_t cols = read_be_u32(in, "IDX cols");
    if (rows == 0 || cols == 0) throw ParseError("IDX image dimensions are zero");
    std::size_t res = opts.idx_resolution;
    if (res == 0) throw ParameterError("idx-images: target resolution must be positive");

    Dataset ds;
    ds.sample_shape = {res, res};
    std::size_t npix = static_cast<std::size_t>(rows) * cols;
    std::vector<char> buf(npix);
    std::size_t limit = opts.max_samples ? std::min<std::size_t>(opts.max_samples, count)
                                         : count;
    for (std::size_t s = 0; s < limit; ++s) {
        in.read(buf.data(), static_cast<std::streamsize>(npix));
        if (!in)
            throw ParseError("truncated IDX payload in image " + std::to_string(s) +
                             " at byte offset " + std::to_string(in.tellg()));
        std::vector<double> img(npix);
        for (std::size_t i = 0; i < npix; ++i)
            img[i] = u8_to_signed(static_cast<double>(static_cast<unsigned char>(buf[i])));
        ds.samples.push_back(area_average_downsample(img, rows, cols, res));
    }
    if (ds.samples.empty()) throw ParseError("dataset is empty: " + path);
    return ds;
}

}  // namespace

std::size_t Dataset::dim() const {
    std::size_t n = 1;
    for (std::size_t e : sample_shape) n *= e;
    return n;
}

Tensor Dataset::sample(std::size_t i) const {
    return Tensor(sample_shape, samples.at(i));
}

DataFormat data_format_from_string(const std::string& s) {
    if (s == "csv-points") return DataFormat::CsvPoints;
    if (s == "raw-u8-images") return DataFormat::RawU8Images;
    if (s == "idx-images") return DataFormat::IdxImages;
    throw ConfigError("unknown dataset format: " + s);
}

Dataset load_dataset(const std::string& path, DataFormat format, const LoadOptions& opts) {
    switch (format) {
        case DataFormat::CsvPoints: return load_csv_points(path, opts);
        case DataFormat::RawU8Images: return load_raw_u8(path, opts);
        case DataFormat::IdxImages: return load_idx(path, opts);
    }
    throw ParameterError("unhandled dataset format");
}

std::vector<double> area_average_downsample(const std::vector<double>& img,
                                            std::size_t rows, std::size_t cols,
                                            std::size_t res) {
    if (img.size() != rows * cols)
        throw DimensionError("area_average_downsample: pixel count mismatch");
    std::vector<double> out(res * res, 0.0);
    double sy = static_cast<double>(rows) / static_cast<double>(res);
    double sx = static_cast<double>(cols) / static_cast<double>(res);
    for (std::size_t ty = 0; ty < res; ++ty) {
        double y0 = ty * sy, y1 = (ty + 1) * sy;
        for (std::size_t tx = 0; tx < res; ++tx) {
            double x0 = tx * sx, x1 = (tx + 1) * sx;
            double acc = 0.0;
            for (std::size_t py = static_cast<std::size_t>(y0);
                 py < rows && static_cast<double>(py) < y1; ++py) {
                double wy = std::min(y1, static_cast<double>(py + 1)) -
                            std::max(y0, static_cast<double>(py));
                if (wy <= 0.0) continue;
                for (std::size_t px = static_cast<std::size_t>(x0);
                     px < cols && static_cast<double>(px) < x1; ++px) {
                    double wx = std::min(x1, static_cast<double>(px + 1)) -
                                std::max(x0, static_cast<double>(px));
                    if (wx <= 0.0) continue;
                    acc += wy * wx * img[py * cols + px];
                }
            }
            out[ty * res + tx] = acc / (sy * sx);
        }
    }
    return out;
}

}  // namespace wdm
