#pragma once

// Template estimation from diffraction data alone: autocorrelation support,
// geometric-ratio amplitude estimate, and zero-frequency mass estimate.

#include <numbers>

#include "phaseflow/forward.hpp"

namespace phaseflow {

// Re[idft2(b^2)], circularly shifted so the peak sits at (rows/2, cols/2).
inline ScalarField autocorrelation(const DiffractionData& b) {
  const ScalarField& bb = b.values;
  ComplexField I(bb.rows, bb.cols);
  for (size_t i = 0; i < bb.v.size(); ++i) I.v[i] = {bb.v[i] * bb.v[i], 0.0};
  ScalarField ac = real_part(idft2(I));
  return circshift(ac, bb.rows / 2, bb.cols / 2);
}

// |A|: number of nodes with auto >= threshold_frac * max(auto).
inline double support_size(const ScalarField& autoc, double threshold_frac) {
  if (!(threshold_frac > 0.0 && threshold_frac < 1.0))
    throw std::invalid_argument("support_size: threshold_frac must lie in (0,1)");
  double cut = threshold_frac * field_max(autoc);
  long long n = 0;
  for (double a : autoc.v)
    if (a >= cut) ++n;
  return static_cast<double>(n);
}

// m = b at mode (0,0): the total mass for data from a nonnegative image.
inline double mass_from_data(const DiffractionData& b) {
  return b.values(0, 0);
}

// a0 = G*m/|A|, the amplitude of a binary object of support |A|/G.
inline double estimate_amplitude(double m, double autoc_support, double G) {
  if (!(m > 0.0) || !(autoc_support > 0.0) || !(G > 0.0))
    throw std::invalid_argument("estimate_amplitude: inputs must be positive");
  return G * m / autoc_support;
}

enum class TemplateShape { Disk, Rectangle, FromFile };

struct TemplateSpec {
  TemplateShape shape = TemplateShape::Disk;
  double support_area = 0.0;  // |S| in pixels^2
  double amplitude = 0.0;     // a0
  double center_row = -1.0, center_col = -1.0;  // < 0: grid center
  double mass = 0.0;          // m; analytic shapes require a0*|S| = m
  double aspect = 2.0;        // rectangle width/height ratio
  std::string file;           // FromFile source (loaded by the caller)
};

// Binary analytic template at amplitude a0 (Disk or Rectangle), or a
// caller-loaded grid (FromFile). Analytic shapes must satisfy the mass
// consistency a0*|S| = m and fit inside the domain.
inline ScalarField build_template(const TemplateSpec& spec, int rows, int cols,
                                  const ScalarField* loaded = nullptr) {
  if (spec.shape == TemplateShape::FromFile) {
    if (!loaded) throw std::invalid_argument("build_template: FromFile needs a loaded grid");
    if (loaded->rows != rows || loaded->cols != cols)
      throw std::invalid_argument("build_template: loaded grid shape mismatch");
    return *loaded;
  }
  if (!(spec.support_area > 0.0) || !(spec.amplitude > 0.0) || !(spec.mass > 0.0))
    throw std::invalid_argument("build_template: nonpositive size/amplitude/mass");
  if (std::abs(spec.amplitude * spec.support_area - spec.mass) > 1e-6 * spec.mass)
    throw std::invalid_argument("build_template: a0*|S| != m");
  double cr = spec.center_row >= 0.0 ? spec.center_row : rows / 2.0;
  double cc = spec.center_col >= 0.0 ? spec.center_col : cols / 2.0;
  ScalarField out(rows, cols);
  if (spec.shape == TemplateShape::Disk) {
    double r = std::sqrt(spec.support_area / std::numbers::pi);
    if (cr - r < 0 || cr + r > rows || cc - r < 0 || cc + r > cols)
      throw std::invalid_argument("build_template: disk exceeds domain");
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) {
        double d2 = (i - cr) * (i - cr) + (j - cc) * (j - cc);
        if (d2 <= r * r) out(i, j) = spec.amplitude;
      }
  } else {
    double w = std::sqrt(spec.support_area * spec.aspect);  // extent along columns
    double h = spec.support_area / w;                       // extent along rows
    if (cr - h / 2 < 0 || cr + h / 2 > rows || cc - w / 2 < 0 || cc + w / 2 > cols)
      throw std::invalid_argument("build_template: rectangle exceeds domain");
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        if (std::abs(i + 0.5 - cr) <= h / 2 && std::abs(j + 0.5 - cc) <= w / 2)
          out(i, j) = spec.amplitude;
  }
  return out;
}

}  // namespace phaseflow
