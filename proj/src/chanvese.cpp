#include "ptp/chanvese.hpp"

#include "ptp/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ptp {

namespace {

// Two-pass chamfer distance from every pixel to the nearest pixel with `target` value.
std::vector<double> chamfer(const BinaryMask& m, bool target) {
    const int w = m.width(), h = m.height();
    constexpr double big = 1e12;
    const double diag = std::numbers::sqrt2;
    std::vector<double> d(m.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = m[i] == target ? 0.0 : big;
    auto at = [&](int x, int y) -> double& { return d[static_cast<std::size_t>(y) * w + x]; };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double v = at(x, y);
            if (x > 0)
                v = std::min(v, at(x - 1, y) + 1.0);
            if (y > 0) {
                v = std::min(v, at(x, y - 1) + 1.0);
                if (x > 0)
                    v = std::min(v, at(x - 1, y - 1) + diag);
                if (x + 1 < w)
                    v = std::min(v, at(x + 1, y - 1) + diag);
            }
            at(x, y) = v;
        }
    for (int y = h - 1; y >= 0; --y)
        for (int x = w - 1; x >= 0; --x) {
            double v = at(x, y);
            if (x + 1 < w)
                v = std::min(v, at(x + 1, y) + 1.0);
            if (y + 1 < h) {
                v = std::min(v, at(x, y + 1) + 1.0);
                if (x + 1 < w)
                    v = std::min(v, at(x + 1, y + 1) + diag);
                if (x > 0)
                    v = std::min(v, at(x - 1, y + 1) + diag);
            }
            at(x, y) = v;
        }
    return d;
}

struct RegionMeans {
    double inside;
    double outside;
};

// Per-row partial sums reduced in row order, so serial and threaded runs agree bit for bit.
RegionMeans region_means(const std::vector<double>& u, const std::vector<double>& phi, int w, int h, Exec exec) {
    std::vector<double> s_in(h), s_out(h);
    std::vector<std::size_t> n_in(h);
    auto row = [&](int y) {
        double a = 0.0, b = 0.0;
        std::size_t n = 0;
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (phi[i] > 0.0) {
                a += u[i];
                ++n;
            } else {
                b += u[i];
            }
        }
        s_in[y] = a;
        s_out[y] = b;
        n_in[y] = n;
    };
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (int y = 0; y < h; ++y)
            row(y);
    } else {
        for (int y = 0; y < h; ++y)
            row(y);
    }
    double a = 0.0, b = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < h; ++y) {
        a += s_in[y];
        b += s_out[y];
        n += n_in[y];
    }
    const std::size_t total = static_cast<std::size_t>(w) * h;
    RegionMeans r{0.0, 0.0};
    if (n > 0)
        r.inside = a / double(n);
    if (n < total)
        r.outside = b / double(total - n);
    if (n == 0)
        r.inside = r.outside;
    if (n == total)
        r.outside = r.inside;
    return r;
}

BinaryMask phase(const std::vector<double>& phi, int w, int h) {
    BinaryMask m(w, h);
    auto md = m.data();
    for (std::size_t i = 0; i < md.size(); ++i)
        md[i] = phi[i] > 0.0 ? 1 : 0;
    return m;
}

} // namespace

void validate(const ChanVeseParams& p) {
    if (!(p.mu >= 0.0) || !(p.dt > 0.0) || p.max_iters < 1 || !(p.tol > 0.0 && p.tol < 1.0) || p.reinit_every < 1 ||
        !(p.epsilon > 0.0))
        throw Error("invalid Chan-Vese parameters");
}

std::vector<double> signed_distance(const BinaryMask& m) {
    const auto to_bg = chamfer(m, false);
    const auto to_fg = chamfer(m, true);
    std::vector<double> phi(m.size());
    for (std::size_t i = 0; i < phi.size(); ++i)
        phi[i] = m[i] ? to_bg[i] - 0.5 : -(to_fg[i] - 0.5);
    return phi;
}

double chanvese_energy(const GrayImage& img, const BinaryMask& region, double mu) {
    if (!region.same_shape(img))
        throw Error("chanvese_energy: dimension mismatch");
    double s_in = 0.0, s_out = 0.0;
    std::size_t n_in = 0;
    const auto px = img.data();
    for (std::size_t i = 0; i < px.size(); ++i) {
        if (region[i]) {
            s_in += px[i] / 255.0;
            ++n_in;
        } else {
            s_out += px[i] / 255.0;
        }
    }
    const std::size_t n_out = px.size() - n_in;
    const double c1 = n_in ? s_in / double(n_in) : 0.0;
    const double c2 = n_out ? s_out / double(n_out) : 0.0;
    double e = 0.0;
    for (std::size_t i = 0; i < px.size(); ++i) {
        const double u = px[i] / 255.0;
        e += region[i] ? (u - c1) * (u - c1) : (u - c2) * (u - c2);
    }
    if (n_in > 0)
        e += mu * double(boundary_pixels(region).size());
    return e;
}

BinaryMask refine_chanvese(const GrayImage& img, const BinaryMask& init, const ChanVeseParams& p, Exec exec,
                           ChanVeseTrace* trace) {
    validate(p);
    if (!init.same_shape(img))
        throw Error("refine_chanvese: image and initial mask dimensions differ");
    if (init.empty())
        return BinaryMask(init.width(), init.height());

    const int w = img.width(), h = img.height();
    const std::size_t n = img.size();
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i)
        u[i] = img.data()[i] / 255.0;

    std::vector<double> phi = signed_distance(init);
    std::vector<double> next(n);
    BinaryMask span_start = phase(phi, w, h);
    const double eps = p.epsilon;

    auto at = [&](int x, int y) {
        return phi[static_cast<std::size_t>(std::clamp(y, 0, h - 1)) * w + std::clamp(x, 0, w - 1)];
    };

    int iter = 0;
    while (iter < p.max_iters) {
        const RegionMeans c = region_means(u, phi, w, h, exec);
        auto update_row = [&](int y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                const double f = phi[i];
                const double fx = (at(x + 1, y) - at(x - 1, y)) / 2.0;
                const double fy = (at(x, y + 1) - at(x, y - 1)) / 2.0;
                const double fxx = at(x + 1, y) - 2.0 * f + at(x - 1, y);
                const double fyy = at(x, y + 1) - 2.0 * f + at(x, y - 1);
                const double fxy = (at(x + 1, y + 1) - at(x + 1, y - 1) - at(x - 1, y + 1) + at(x - 1, y - 1)) / 4.0;
                const double g2 = fx * fx + fy * fy;
                const double kappa = (fxx * fy * fy - 2.0 * fx * fy * fxy + fyy * fx * fx) / std::pow(g2 + 1e-8, 1.5);
                const double delta = eps / (std::numbers::pi * (eps * eps + f * f));
                const double din = u[i] - c.inside, dout = u[i] - c.outside;
                next[i] = f + p.dt * delta * (p.mu * kappa - din * din + dout * dout);
            }
        };
        if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
            for (int y = 0; y < h; ++y)
                update_row(y);
        } else {
            for (int y = 0; y < h; ++y)
                update_row(y);
        }
        phi.swap(next);
        ++iter;

        if (trace)
            trace->energy.push_back(chanvese_energy(img, phase(phi, w, h), p.mu));

        if (iter % p.reinit_every == 0) {
            const BinaryMask cur = phase(phi, w, h);
            std::size_t flipped = 0;
            for (std::size_t i = 0; i < n; ++i)
                flipped += cur[i] != span_start[i];
            if (cur.empty())
                break;
            phi = signed_distance(cur);
            if (trace)
                trace->reinit_at.push_back(iter);
            if (double(flipped) < p.tol * double(n))
                break;
            span_start = cur;
        }
    }
    if (trace)
        trace->iterations = iter;
    return postprocess(phase(phi, w, h));
}

Refiner chanvese_refiner(ChanVeseParams p) {
    validate(p);
    return [p](const GrayImage& img, const BinaryMask& init) { return refine_chanvese(img, init, p); };
}

Refiner identity_refiner() {
    return [](const GrayImage&, const BinaryMask& init) { return init; };
}

} // namespace ptp
