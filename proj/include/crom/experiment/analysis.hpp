#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "crom/numerics/dense.hpp"

namespace crom {

/// First two principal-component scores of a latent trajectory (columns of `q`).
struct LatentPca {
  DenseMatrix scores;      // N x 2
  Vector mean;             // r
  DenseMatrix components;  // r x 2 (second column zero when r = 1)
  Vector variance;         // explained variance of the two components
  bool degenerate = false; // r = 1: second component zero-filled
};

inline LatentPca latent_pca(const DenseMatrix& q) {
  CROM_EXPECT(q.cols() >= 2, "latent_pca: need at least two latent snapshots");
  const Index r = q.rows(), n = q.cols();
  LatentPca out;
  out.mean = q.rowwise().mean();
  const DenseMatrix centered = q.colwise() - out.mean;
  const DenseMatrix cov = centered * centered.transpose() / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(cov);
  out.components = DenseMatrix::Zero(r, 2);
  out.variance = Vector::Zero(2);
  const Index take = std::min<Index>(2, r);
  for (Index k = 0; k < take; ++k) {
    Vector c = eig.eigenvectors().col(r - 1 - k);
    Index imax = 0;
    c.cwiseAbs().maxCoeff(&imax);
    if (c(imax) < 0.0) c = -c;
    out.components.col(k) = c;
    out.variance(k) = std::max(0.0, eig.eigenvalues()(r - 1 - k));
  }
  out.degenerate = r == 1;
  out.scores = centered.transpose() * out.components;
  return out;
}

/// (1 - t) a + t b for each t; t outside [0, 1] extrapolates.
inline DenseMatrix latent_interpolate(const Vector& a, const Vector& b, const std::vector<double>& ts) {
  CROM_EXPECT(a.size() == b.size(), "latent_interpolate: size mismatch");
  DenseMatrix out(a.size(), static_cast<Index>(ts.size()));
  for (std::size_t k = 0; k < ts.size(); ++k) out.col(static_cast<Index>(k)) = (1.0 - ts[k]) * a + ts[k] * b;
  return out;
}

inline void write_pca_csv(const std::filesystem::path& path, const LatentPca& pca) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  out << "n,pc1,pc2\n";
  for (Index n = 0; n < pca.scores.rows(); ++n) out << n << ',' << pca.scores(n, 0) << ',' << pca.scores(n, 1) << '\n';
}

/// Minimal standalone SVG line chart of one or more series sharing an x axis.
struct SvgSeries {
  std::string label;
  std::vector<double> y;
};

inline void write_svg_plot(const std::filesystem::path& path, const std::string& title, const std::vector<double>& x,
                           const std::vector<SvgSeries>& series, bool log_y = false) {
  const double w = 640, h = 400, ml = 60, mr = 20, mt = 30, mb = 40;
  double xmin = x.empty() ? 0 : x.front(), xmax = x.empty() ? 1 : x.back();
  double ymin = INFINITY, ymax = -INFINITY;
  auto tf = [&](double v) { return log_y ? std::log10(std::max(v, 1e-300)) : v; };
  for (const auto& s : series)
    for (double v : s.y)
      if (std::isfinite(tf(v))) ymin = std::min(ymin, tf(v)), ymax = std::max(ymax, tf(v));
  if (!(ymax > ymin)) ymin -= 1, ymax += 1;
  if (!(xmax > xmin)) xmax = xmin + 1;
  auto px = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (w - ml - mr); };
  auto py = [&](double v) { return h - mb - (tf(v) - ymin) / (ymax - ymin) * (h - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\"" << h - mb
      << "\" stroke=\"black\"/>\n<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"5\" y=\"" << mt + 10 << "\" font-size=\"10\">" << (log_y ? "1e" : "") << ymax << "</text>\n";
  out << "<text x=\"5\" y=\"" << h - mb << "\" font-size=\"10\">" << (log_y ? "1e" : "") << ymin << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    out << "<polyline fill=\"none\" stroke=\"" << colors[s % 6] << "\" points=\"";
    for (std::size_t k = 0; k < series[s].y.size() && k < x.size(); ++k)
      if (std::isfinite(tf(series[s].y[k]))) out << px(x[k]) << ',' << py(series[s].y[k]) << ' ';
    out << "\"/>\n<text x=\"" << w - mr - 150 << "\" y=\"" << mt + 15 * (static_cast<double>(s) + 1) << "\" fill=\""
        << colors[s % 6] << "\" font-size=\"11\">" << series[s].label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace crom
