#pragma once

#include "ptp/exec.hpp"
#include "ptp/mask.hpp"

#include <functional>
#include <vector>

namespace ptp {

struct ChanVeseParams {
    double mu = 0.2;        // boundary-length weight
    double dt = 1.0;        // time step
    int max_iters = 500;
    double tol = 1e-4;      // stop when fewer than tol * N pixels flip phase over one reinit span
    int reinit_every = 50;  // iterations between signed-distance reinitialisations
    double epsilon = 1.0;   // width of the regularised delta
};

void validate(const ChanVeseParams& p);

// Signed distance to the mask boundary from a two-pass (1, sqrt 2) chamfer:
// positive inside, negative outside, +-0.5 on the pixels adjacent to the interface.
std::vector<double> signed_distance(const BinaryMask& m);

// Two-phase piecewise-constant energy of a partition on [0,1]-normalised intensities,
// with perimeter measured as the boundary-pixel count.
double chanvese_energy(const GrayImage& img, const BinaryMask& region, double mu);

struct ChanVeseTrace {
    int iterations = 0;
    std::vector<double> energy; // energy of {phi > 0} after each iteration
    std::vector<int> reinit_at; // iterations after which phi was reinitialised
};

BinaryMask refine_chanvese(const GrayImage& img, const BinaryMask& init, const ChanVeseParams& p = {},
                           Exec exec = Exec::parallel, ChanVeseTrace* trace = nullptr);

// Refinement tool contract: image + coarse mask -> fine mask.
using Refiner = std::function<BinaryMask(const GrayImage&, const BinaryMask&)>;

Refiner chanvese_refiner(ChanVeseParams p = {});
Refiner identity_refiner();

} // namespace ptp
