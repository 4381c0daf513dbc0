// Generates the bundled 128x128 content and style images deterministically.
// Run from the repo root:  make_assets <assets-dir>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "swag/image.hpp"

namespace {

constexpr int kSize = 128;

// Base gray per channel sits at the normalization mean so texture amplitude
// maps directly to normalized contrast.
constexpr double kBase[3] = {124.0, 116.0, 104.0};

double clamp255(double v) { return std::min(255.0, std::max(0.0, v)); }

struct ValueNoise {
    std::vector<double> grid;
    int cells;

    ValueNoise(std::mt19937_64& rng, int cells_) : cells(cells_) {
        grid.resize(static_cast<std::size_t>((cells + 1) * (cells + 1)));
        for (auto& v : grid) v = (double)(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    }

    double at(double x, double y) const {
        const double fx = x / kSize * cells, fy = y / kSize * cells;
        const int x0 = std::min(cells - 1, (int)fx), y0 = std::min(cells - 1, (int)fy);
        const double wx = fx - x0, wy = fy - y0;
        auto g = [&](int i, int j) { return grid[(std::size_t)(j * (cells + 1) + i)]; };
        const double sx = wx * wx * (3 - 2 * wx), sy = wy * wy * (3 - 2 * wy);
        return g(x0, y0) * (1 - sx) * (1 - sy) + g(x0 + 1, y0) * sx * (1 - sy) +
               g(x0, y0 + 1) * (1 - sx) * sy + g(x0 + 1, y0 + 1) * sx * sy;
    }
};

// field(x, y, c) in roughly [-1, 1]; amp in gray levels.
template <typename F>
swag::ImageBuffer render(F&& field, double amp) {
    swag::ImageBuffer img(kSize, kSize);
    for (int y = 0; y < kSize; ++y)
        for (int x = 0; x < kSize; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(x, y, c) = static_cast<std::uint8_t>(
                    clamp255(kBase[c] + amp * field(x, y, c) + 0.5));
    return img;
}

std::vector<swag::ImageBuffer> make_styles() {
    std::mt19937_64 rng(20240501);
    std::vector<swag::ImageBuffer> out;

    // s0: plaid
    out.push_back(render(
        [](int x, int y, int c) {
            return 0.5 * (std::sin(x / (2.9 + 0.4 * c)) + std::sin(y / (3.4 - 0.3 * c)));
        },
        11));

    // s1: three octaves of value noise
    {
        ValueNoise n1(rng, 8), n2(rng, 16), n3(rng, 32);
        out.push_back(render(
            [&](int x, int y, int c) {
                const double p = 2.0 * c;
                return 0.55 * n1.at(x + p, y) + 0.3 * n2.at(x, y + p) + 0.15 * n3.at(x, y);
            },
            13));
    }

    // s2: diagonal stripes
    out.push_back(render(
        [](int x, int y, int c) {
            const double t = (x + y) / (4.0 + 0.5 * c);
            return std::sin(t) > 0 ? 0.8 : -0.8;
        },
        9));

    // s3: rings
    out.push_back(render(
        [](int x, int y, int c) {
            const double dx = x - 64.0, dy = y - 64.0;
            return std::sin(std::sqrt(dx * dx + dy * dy) / (3.0 + 0.4 * c));
        },
        10));

    // s4: checkerboard with noise
    {
        ValueNoise n(rng, 16);
        out.push_back(render(
            [&](int x, int y, int c) {
                const double ck = ((x / 8 + y / 8) % 2 == 0) ? 0.6 : -0.6;
                return ck + 0.5 * n.at(x, y + 3 * c);
            },
            9));
    }

    // s5: cellular shading
    {
        std::vector<std::pair<double, double>> seeds(24);
        for (auto& s : seeds)
            s = {(double)(rng() >> 11) * 0x1.0p-53 * kSize,
                 (double)(rng() >> 11) * 0x1.0p-53 * kSize};
        out.push_back(render(
            [&](int x, int y, int c) {
                double best = 1e9;
                for (const auto& [sx, sy] : seeds) {
                    const double d = std::hypot(x - sx, y - sy);
                    best = std::min(best, d);
                }
                return std::sin(best / (2.0 + 0.3 * c));
            },
            10));
    }

    // s6: swirl
    out.push_back(render(
        [](int x, int y, int c) {
            const double dx = (x - 64.0) / 64.0, dy = (y - 64.0) / 64.0;
            const double r = std::hypot(dx, dy), a = std::atan2(dy, dx);
            return std::sin(10.0 * r + 5.0 * a + 0.7 * c);
        },
        10));

    // s7: coarse blobs
    {
        ValueNoise n(rng, 5);
        out.push_back(render([&](int x, int y, int c) { return n.at(x + 4.0 * c, y); }, 14));
    }

    // s8: crosshatch
    out.push_back(render(
        [](int x, int y, int c) {
            const double a = std::sin(x / (2.5 + 0.2 * c)), b = std::sin(y / 3.1);
            return 0.5 * (std::tanh(3 * a) + std::tanh(3 * b));
        },
        8));

    // s9: stripes over noise
    {
        ValueNoise n(rng, 12);
        out.push_back(render(
            [&](int x, int y, int c) {
                return 0.5 * std::sin((2 * x - y) / 5.0 + c) + 0.5 * n.at(x, y);
            },
            11));
    }
    return out;
}

std::vector<swag::ImageBuffer> make_contents() {
    std::mt19937_64 rng(20240502);
    std::vector<swag::ImageBuffer> out;

    // c0: horizontal gradient with a soft disk
    out.push_back(render(
        [](int x, int y, int c) {
            const double g = (x - 64.0) / 64.0;
            const double d = std::hypot(x - 48.0, y - 56.0);
            const double disk = d < 26 ? 0.8 * (1.0 - d / 26.0) : 0.0;
            return 0.6 * g + disk * (c == 0 ? 1.0 : 0.4);
        },
        15));

    // c1: two blobs on a vertical gradient
    out.push_back(render(
        [](int x, int y, int c) {
            const double g = (y - 64.0) / 64.0;
            const double d1 = std::hypot(x - 40.0, y - 44.0);
            const double d2 = std::hypot(x - 88.0, y - 80.0);
            return 0.5 * g + 0.8 * std::exp(-d1 * d1 / 500.0) -
                   0.7 * std::exp(-d2 * d2 / 700.0) * (c == 2 ? 1.3 : 0.8);
        },
        18));

    // c2: large soft blocks
    out.push_back(render(
        [](int x, int y, int c) {
            return (((x / 32 + y / 32) % 2 == 0) ? 0.5 : -0.5) +
                   0.2 * std::sin(x / 17.0 + c);
        },
        15));

    // c3: radial gradient
    out.push_back(render(
        [](int x, int y, int c) {
            return 1.0 - std::hypot(x - 64.0, y - 64.0) / 64.0 + 0.05 * c;
        },
        18));

    // c4: very coarse noise
    {
        ValueNoise n(rng, 3);
        out.push_back(render([&](int x, int y, int c) { return n.at(x, y + 2.0 * c); }, 15));
    }

    // c5: diagonal gradient with a stripe hint
    out.push_back(render(
        [](int x, int y, int c) {
            return 0.6 * (x + y - 128.0) / 128.0 + 0.15 * std::sin(y / 9.0 + c);
        },
        18));

    // c6: soft square
    out.push_back(render(
        [](int x, int y, int c) {
            const double in = (std::abs(x - 64) < 30 && std::abs(y - 64) < 30) ? 0.7 : -0.3;
            return in + 0.1 * std::sin((x + 2 * y) / 21.0 + c);
        },
        17));

    // c7: low-frequency waves
    out.push_back(render(
        [](int x, int y, int c) {
            return 0.5 * std::sin(x / 19.0 + 0.6 * c) + 0.5 * std::sin(y / 23.0);
        },
        18));

    // c8: three gaussian bumps
    out.push_back(render(
        [](int x, int y, int c) {
            const double d1 = std::hypot(x - 30.0, y - 30.0);
            const double d2 = std::hypot(x - 90.0, y - 50.0);
            const double d3 = std::hypot(x - 60.0, y - 95.0);
            return 0.9 * std::exp(-d1 * d1 / 400.0) + 0.7 * std::exp(-d2 * d2 / 600.0) +
                   0.8 * std::exp(-d3 * d3 / 500.0) - 0.3 + 0.05 * c;
        },
        15));

    // c9: gradient plus coarse noise
    {
        ValueNoise n(rng, 4);
        out.push_back(render(
            [&](int x, int y, int c) {
                return 0.4 * (x - 64.0) / 64.0 + 0.6 * n.at(x, y) + 0.04 * c;
            },
            18));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string root = argc > 1 ? argv[1] : "assets";
    std::filesystem::create_directories(root + "/style");
    std::filesystem::create_directories(root + "/content");
    const auto styles = make_styles();
    const auto contents = make_contents();
    char name[64];
    for (std::size_t i = 0; i < styles.size(); ++i) {
        std::snprintf(name, sizeof(name), "%s/style/s%02zu.ppm", root.c_str(), i);
        swag::save_ppm(name, styles[i]);
    }
    for (std::size_t i = 0; i < contents.size(); ++i) {
        std::snprintf(name, sizeof(name), "%s/content/c%02zu.ppm", root.c_str(), i);
        swag::save_ppm(name, contents[i]);
    }
    std::printf("wrote %zu style and %zu content images under %s\n", styles.size(),
                contents.size(), root.c_str());
    return 0;
}
