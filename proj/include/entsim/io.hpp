#pragma once

#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <vector>

#include "entsim/channel.hpp"
#include "entsim/counting.hpp"
#include "entsim/qstate.hpp"
#include "entsim/scan.hpp"

namespace entsim {

using json = nlohmann::json;

inline json density_matrix_to_json(const DensityMatrix4& rho) {
  json re = json::array();
  json im = json::array();
  for (int i = 0; i < 4; ++i) {
    json row_re = json::array();
    json row_im = json::array();
    for (int j = 0; j < 4; ++j) {
      row_re.push_back(rho.matrix()(i, j).real());
      row_im.push_back(rho.matrix()(i, j).imag());
    }
    re.push_back(row_re);
    im.push_back(row_im);
  }
  return json{{"basis", "HH,HV,VH,VV"}, {"re", re}, {"im", im}};
}

inline DensityMatrix4 density_matrix_from_json(const json& j) {
  if (j.value("basis", "") != "HH,HV,VH,VV")
    throw ConfigError("density matrix JSON: unexpected basis");
  Matrix4c m;
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k)
      m(i, k) = Complex(j.at("re").at(i).at(k).get<double>(),
                        j.at("im").at(i).at(k).get<double>());
  return DensityMatrix4(m);
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& curve) {
  out << "a,V_ideal,V_scaled,eps_re,eps_im\n";
  out.precision(12);
  for (const auto& p : curve)
    out << p.a << ',' << p.v_ideal << ',' << p.v_scaled << ',' << p.eps.real() << ','
        << p.eps.imag() << '\n';
}

inline void write_counts_csv(std::ostream& out, const std::vector<CountRecord>& records) {
  out << "setting_index,ket1,ket2,count,expected\n";
  out.precision(12);
  for (std::size_t i = 0; i < records.size(); ++i)
    out << i << ',' << records[i].projector.ket1 << ',' << records[i].projector.ket2
        << ',' << records[i].count << ',' << records[i].expected << '\n';
}

inline void write_scan_csv(std::ostream& out, const CoincidenceScan& scan) {
  out << "theta,theta_prime,count\n";
  out.precision(12);
  for (std::size_t i = 0; i < scan.signal_positions.size(); ++i)
    for (std::size_t j = 0; j < scan.idler_positions.size(); ++j)
      out << scan.signal_positions[i] << ',' << scan.idler_positions[j] << ','
          << scan.counts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
          << '\n';
}

}  // namespace entsim
