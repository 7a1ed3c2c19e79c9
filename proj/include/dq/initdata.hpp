#pragma once

#include "dq/field.hpp"
#include "dq/model.hpp"

// Construction of the gamma-indexed approximating initial data: sigma kept,
// mu truncated at 1/gamma, phi clamped to +-(1 - gamma/2) and then smoothed
// through the Neumann problem (I - gamma*Lap) phi0g = phi0tilde, which keeps
// the pointwise bound (maximum principle, the operator is an M-matrix) and
// can only lower the discrete H1 norm (energy estimate).

namespace dq {

Field truncate_mu0(const Field& mu0, double gamma);

// Clamp step only (the intermediate quantity the energy estimate compares against).
Field clamp_phi0(const Field& phi0, double gamma);

Field smooth_phi0(const Field& phi0, double gamma);

InitialData make_initial_data(const Field& mu0, const Field& phi0, const Field& sigma0, double gamma);

} // namespace dq
