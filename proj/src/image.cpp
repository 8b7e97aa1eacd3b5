#include "vti/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vti/errors.hpp"

namespace vti {

ImageGrid::ImageGrid(int h, int w, int c, double fill) {
    if (h < 0 || w < 0 || c < 1)
        throw invalid_input("ImageGrid: non-positive dimensions");
    height = h;
    width = w;
    channels = c;
    data.assign(static_cast<std::size_t>(h) * w * c, fill);
}

bool ImageGrid::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

double ImageGrid::min() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : data) m = std::min(m, v);
    return m;
}

double ImageGrid::max() const {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : data) m = std::max(m, v);
    return m;
}

double ImageGrid::mean() const {
    if (data.empty()) return 0.0;
    double s = 0.0;
    for (double v : data) s += v;
    return s / static_cast<double>(data.size());
}

ImageGrid to_grayscale(const ImageGrid& image) {
    if (image.empty())
        throw invalid_input("to_grayscale: empty image");
    if (image.channels == 1) return image;

    ImageGrid out(image.height, image.width, 1);
    const double inv_k = 1.0 / image.channels;
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) {
            double s = 0.0;
            for (int c = 0; c < image.channels; ++c) s += image.at(y, x, c);
            out.at(y, x) = s * inv_k;
        }
    return out;
}

GradientField gradient(const ImageGrid& image) {
    if (image.channels != 1)
        throw invalid_input("gradient: expected a single-channel image");
    if (image.height < 2 || image.width < 2)
        throw invalid_input("gradient: image must be at least 2x2");

    GradientField g{ImageGrid(image.height, image.width, 1),
                    ImageGrid(image.height, image.width, 1)};
    for (int y = 0; y < image.height; ++y) {
        const DiffStencil sy = diff_stencil(y, image.height);
        for (int x = 0; x < image.width; ++x) {
            const DiffStencil sx = diff_stencil(x, image.width);
            g.gx.at(y, x) = sx.w * (image.at(y, sx.b) - image.at(y, sx.a));
            g.gy.at(y, x) = sy.w * (image.at(sy.b, x) - image.at(sy.a, x));
        }
    }
    return g;
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[i + radius] = w;
        sum += w;
    }
    for (double& w : k) w /= sum;
    return k;
}

}  // namespace

ImageGrid gaussian_blur(const ImageGrid& image, double sigma) {
    if (sigma < 0.0)
        throw invalid_input("gaussian_blur: negative sigma");
    if (image.empty())
        throw invalid_input("gaussian_blur: empty image");
    if (sigma == 0.0) return image;

    const std::vector<double> kernel = gaussian_kernel(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);
    const int h = image.height, w = image.width, ch = image.channels;

    // Horizontal pass, then vertical.
    ImageGrid tmp(h, w, ch);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < ch; ++c) {
                double s = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    s += kernel[i + radius] * image.at(y, reflect_index(x + i, w), c);
                tmp.at(y, x, c) = s;
            }
    ImageGrid out(h, w, ch);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < ch; ++c) {
                double s = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    s += kernel[i + radius] * tmp.at(reflect_index(y + i, h), x, c);
                out.at(y, x, c) = s;
            }
    return out;
}

ImageGrid laplacian(const ImageGrid& image) {
    if (image.channels != 1)
        throw invalid_input("laplacian: expected a single-channel image");
    if (image.height < 3 || image.width < 3)
        throw invalid_input("laplacian: image must be at least 3x3");

    const int h = image.height, w = image.width;
    ImageGrid out(h, w, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double c = image.at(y, x);
            out.at(y, x) = image.at(y, reflect_index(x - 1, w)) +
                           image.at(y, reflect_index(x + 1, w)) +
                           image.at(reflect_index(y - 1, h), x) +
                           image.at(reflect_index(y + 1, h), x) - 4.0 * c;
        }
    return out;
}

NormalizeResult normalize01(const ImageGrid& image) {
    if (image.empty())
        throw invalid_input("normalize01: empty image");
    const double lo = image.min();
    const double hi = image.max();
    if (!(hi > lo))
        throw invalid_input("normalize01: degenerate range (constant image)");

    // Division (not multiplication by a reciprocal) so the extremes map to
    // exactly 0 and 1.
    NormalizeResult r{ImageGrid(image.height, image.width, image.channels), lo, hi};
    const double range = hi - lo;
    for (std::size_t i = 0; i < image.size(); ++i)
        r.image.data[i] = (image.data[i] - lo) / range;
    return r;
}

double percentile(const ImageGrid& image, double q) {
    if (image.empty())
        throw invalid_input("percentile: empty image");
    if (q < 0.0 || q > 1.0)
        throw invalid_input("percentile: q outside [0, 1]");

    std::vector<double> sorted(image.data);
    std::sort(sorted.begin(), sorted.end());
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace vti
