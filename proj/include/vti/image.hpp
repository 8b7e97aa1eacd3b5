#pragma once

#include <cstddef>
#include <vector>

namespace vti {

// Dense H x W x C scalar field, double precision, row-major with interleaved
// channels. Carrier for visible images, thermal images, albedo, shading and
// label maps alike.
struct ImageGrid {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<double> data;

    ImageGrid() = default;
    ImageGrid(int h, int w, int c = 1, double fill = 0.0);

    std::size_t index(int y, int x, int c = 0) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
    double& at(int y, int x, int c = 0) { return data[index(y, x, c)]; }
    double at(int y, int x, int c = 0) const { return data[index(y, x, c)]; }

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
    std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }

    bool same_shape(const ImageGrid& other) const {
        return height == other.height && width == other.width && channels == other.channels;
    }
    bool same_extent(const ImageGrid& other) const {
        return height == other.height && width == other.width;
    }

    bool all_finite() const;
    double min() const;
    double max() const;
    double mean() const;
};

// Per-pixel x/y derivatives of a single-channel image, units intensity/pixel.
struct GradientField {
    ImageGrid gx;
    ImageGrid gy;
};

struct NormalizeResult {
    ImageGrid image;
    double min = 0.0;
    double max = 1.0;
};

// Half-sample symmetric border index (... 1 0 | 0 1 ... n-1 | n-1 n-2 ...).
// Chosen everywhere: it keeps normalized convolutions mean-preserving and the
// stencil Laplacian zero-sum over the grid.
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

// Derivative stencil along one axis: d/di ~= w * (I[b] - I[a]).
// Central differences in the interior, one-sided at the two borders.
struct DiffStencil {
    int a;
    int b;
    double w;
};

inline DiffStencil diff_stencil(int i, int n) {
    if (i == 0) return {0, 1, 1.0};
    if (i == n - 1) return {n - 2, n - 1, 1.0};
    return {i - 1, i + 1, 0.5};
}

// Per-pixel arithmetic mean over channels; a 1-channel image is returned unchanged.
ImageGrid to_grayscale(const ImageGrid& image);

// Spatial derivatives of a single-channel image (see diff_stencil).
GradientField gradient(const ImageGrid& image);

// Separable Gaussian convolution, kernel radius ceil(3*sigma), reflected
// borders. sigma = 0 is the identity.
ImageGrid gaussian_blur(const ImageGrid& image, double sigma);

// 5-point Laplacian (4 neighbors - 4x center), reflected borders.
ImageGrid laplacian(const ImageGrid& image);

// Affine map onto [0, 1]; returns the offsets so callers can invert.
// A constant image has no range and is rejected.
NormalizeResult normalize01(const ImageGrid& image);

// Quantile in [0, 1] with linear interpolation between order statistics.
double percentile(const ImageGrid& image, double q);

}  // namespace vti
