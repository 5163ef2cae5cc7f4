#include "diffbias/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "diffbias/error.hpp"
#include "diffbias/serialize.hpp"

namespace diffbias {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

}  // namespace

std::string scatter_svg(const Matrix& target, const Matrix& generated, const ScatterOptions& options) {
  if (target.cols() < 2 || generated.cols() < 2) throw ValidationError("scatter plot needs at least 2 columns");
  const double margin = 50.0;
  const double w = options.width;
  const double h = options.height;

  double xmin = std::min(target.col(0).minCoeff(), generated.col(0).minCoeff());
  double xmax = std::max(target.col(0).maxCoeff(), generated.col(0).maxCoeff());
  double ymin = std::min(target.col(1).minCoeff(), generated.col(1).minCoeff());
  double ymax = std::max(target.col(1).maxCoeff(), generated.col(1).maxCoeff());
  const double padx = 0.05 * std::max(xmax - xmin, 1e-9);
  const double pady = 0.05 * std::max(ymax - ymin, 1e-9);
  xmin -= padx;
  xmax += padx;
  ymin -= pady;
  ymax += pady;
  auto px = [&](double x) { return margin + (x - xmin) / (xmax - xmin) * (w - 2 * margin); };
  auto py = [&](double y) { return h - margin - (y - ymin) / (ymax - ymin) * (h - 2 * margin); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
    << ' ' << h << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << w - 2 * margin << "\" height=\""
    << h - 2 * margin << "\" fill=\"none\" stroke=\"black\"/>\n";
  if (!options.title.empty())
    s << "<text x=\"" << w / 2 << "\" y=\"" << margin / 2 << "\" text-anchor=\"middle\" font-size=\"16\">"
      << escape(options.title) << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    s << "<text x=\"" << px(fx) << "\" y=\"" << h - margin + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
      << num(fx) << "</text>\n";
    s << "<text x=\"" << margin - 6 << "\" y=\"" << py(fy) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
      << num(fy) << "</text>\n";
  }

  auto layer = [&](const Matrix& pts, const char* color, double opacity) {
    const Index step = std::max<Index>(1, (pts.rows() + options.max_points - 1) / options.max_points);
    s << "<g fill=\"" << color << "\" fill-opacity=\"" << opacity << "\">\n";
    for (Index i = 0; i < pts.rows(); i += step)
      s << "<circle cx=\"" << num(px(pts(i, 0))) << "\" cy=\"" << num(py(pts(i, 1))) << "\" r=\"1.6\"/>\n";
    s << "</g>\n";
  };
  layer(target, "#999999", 0.5);
  layer(generated, "#d62728", 0.6);

  const double lx = w - margin - 150;
  const double ly = margin + 12;
  s << "<rect x=\"" << lx - 8 << "\" y=\"" << ly - 14 << "\" width=\"154\" height=\"44\" fill=\"white\" "
       "stroke=\"#cccccc\"/>\n";
  s << "<circle cx=\"" << lx << "\" cy=\"" << ly - 4 << "\" r=\"4\" fill=\"#999999\"/>\n";
  s << "<text x=\"" << lx + 10 << "\" y=\"" << ly << "\" font-size=\"12\">" << escape(options.target_label)
    << "</text>\n";
  s << "<circle cx=\"" << lx << "\" cy=\"" << ly + 16 << "\" r=\"4\" fill=\"#d62728\"/>\n";
  s << "<text x=\"" << lx + 10 << "\" y=\"" << ly + 20 << "\" font-size=\"12\">" << escape(options.generated_label)
    << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

void write_scatter_svg(const std::filesystem::path& path, const Matrix& target, const Matrix& generated,
                       const ScatterOptions& options) {
  write_text_file(path, scatter_svg(target, generated, options));
}

}  // namespace diffbias
