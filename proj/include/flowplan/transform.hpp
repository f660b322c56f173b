#pragma once

// Value transforms mapping cost-to-go v in [0, inf] onto [0, 1].
//
// The harmonic form H(v) = v / (1 + v) keeps obstacles (v = inf) at the finite
// pin 1 while staying representable for large v, unlike the Kruzkov form
// 1 - exp(-v) which rounds to 1 once exp(-v) drops below half an ulp of 1.

namespace flowplan {

enum class TransformKind { Harmonic, Kruzkov };

const char* to_string(TransformKind kind);

/// H(v) = v / (1 + v); H(inf) = 1. Throws std::domain_error for v < 0 or NaN.
double harmonic(double v);

/// v = h / (1 - h); h = 1 maps to +inf. Throws std::domain_error outside [0, 1].
double harmonic_inverse(double h);

/// H(H^-1(h) + x), evaluated without leaving transformed space as
/// (h + c) / (1 + c) with c = x (1 - h). Exact for x = 0 and for h = 1.
double harmonic_shift(double h, double x);

/// H(alpha * H^-1(h_time) + (1 - alpha) * H^-1(h_energy)).
/// Both inputs at 1 yield 1 so forbidden points stay absorbing for any alpha.
double harmonic_convex(double h_time, double h_energy, double alpha);

double kruzkov(double v);
double kruzkov_inverse(double h);
/// Kruzkov counterpart of harmonic_shift: 1 - (1 - h) exp(-x).
double kruzkov_shift(double h, double x);

/// True when h lies within one machine epsilon of 1, where the transformed
/// value no longer resolves the cost-to-go (or it is infinite).
bool saturated(double h);

double transform(TransformKind kind, double v);
double transform_inverse(TransformKind kind, double h);
double transform_shift(TransformKind kind, double h, double x);

}  // namespace flowplan
