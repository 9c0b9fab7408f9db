#include "vmsynth/metrics.hpp"

#include <cmath>
#include <vector>

#include "vmsynth/error.hpp"

namespace vmsynth::metrics {

namespace {

void check_pair(const RgbImage& a, const RgbImage& b) {
    if (a.width != b.width || a.height != b.height) throw InputError("image dimensions differ");
    if (a.width <= 0 || a.height <= 0) throw InputError("empty image");
}

std::vector<double> gaussian_kernel(int size, double sigma) {
    std::vector<double> k(size);
    const double c = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        k[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (auto& v : k) v /= sum;
    return k;
}

// Separable 'valid' filtering: output is (w-n+1) x (h-n+1).
std::vector<double> filter_valid(const std::vector<double>& img, int w, int h, const std::vector<double>& k) {
    const int n = static_cast<int>(k.size());
    const int ow = w - n + 1;
    const int oh = h - n + 1;
    std::vector<double> rows(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[i] * img[static_cast<std::size_t>(y) * w + x + i];
            rows[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    return out;
}

}  // namespace

double mse(const RgbImage& a, const RgbImage& b) {
    check_pair(a, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        sum += d * d;
    }
    return sum / static_cast<double>(a.data.size());
}

double psnr(const RgbImage& a, const RgbImage& b) {
    const double m = mse(a, b);
    if (m == 0.0) return kPsnrIdentical;
    return 20.0 * std::log10(255.0 / std::sqrt(m));
}

double ssim(const RgbImage& a, const RgbImage& b, const SsimOptions& opt) {
    check_pair(a, b);
    if (a.width < opt.window || a.height < opt.window) throw InputError("image smaller than the SSIM window");
    const auto k = gaussian_kernel(opt.window, opt.sigma);
    const double c1 = (opt.k1 * opt.dynamic_range) * (opt.k1 * opt.dynamic_range);
    const double c2 = (opt.k2 * opt.dynamic_range) * (opt.k2 * opt.dynamic_range);
    const int w = a.width;
    const int h = a.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;

    double total = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
        std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = a.data[i * 3 + ch];
            y[i] = b.data[i * 3 + ch];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mx = filter_valid(x, w, h, k);
        const auto my = filter_valid(y, w, h, k);
        const auto sxx = filter_valid(xx, w, h, k);
        const auto syy = filter_valid(yy, w, h, k);
        const auto sxy = filter_valid(xy, w, h, k);
        double sum = 0.0;
        for (std::size_t i = 0; i < mx.size(); ++i) {
            const double vx = sxx[i] - mx[i] * mx[i];
            const double vy = syy[i] - my[i] * my[i];
            const double cov = sxy[i] - mx[i] * my[i];
            sum += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
                   ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
        }
        total += sum / static_cast<double>(mx.size());
    }
    return total / 3.0;
}

}  // namespace vmsynth::metrics
