#ifndef WDM_DATASET_HPP
#define WDM_DATASET_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "wdm/tensor.hpp"

namespace wdm {

// In-memory dataset: flat real-valued samples sharing one shape.
// Image data is rescaled to [-1, 1] at load time.
struct Dataset {
    std::vector<std::size_t> sample_shape;
    std::vector<std::vector<double>> samples;

    std::size_t size() const { return samples.size(); }
    std::size_t dim() const;
    Tensor sample(std::size_t i) const;
};

enum class DataFormat { CsvPoints, RawU8Images, IdxImages };

DataFormat data_format_from_string(const std::string& s);

struct LoadOptions {
    // Required for raw-u8-images: the fixed image shape (rows, cols).
    std::vector<std::size_t> raw_shape;
    // Target square resolution for idx-images (area-average downsample).
    std::size_t idx_resolution = 8;
    // Optional cap on the number of samples ingested (0 = all).
    std::size_t max_samples = 0;
};

Dataset load_dataset(const std::string& path, DataFormat format,
                     const LoadOptions& opts = {});

// Area-average resample of a single-channel image to res x res. Exact
// fractional-overlap weighting, so constant images stay constant.
std::vector<double> area_average_downsample(const std::vector<double>& img,
                                            std::size_t rows, std::size_t cols,
                                            std::size_t res);

}  // namespace wdm

#endif
