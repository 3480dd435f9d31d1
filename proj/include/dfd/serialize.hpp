#pragma once

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "dfd/core/io.hpp"
#include "dfd/core/require.hpp"
#include "dfd/frame.hpp"

namespace dfd {

/// Writes a decomposition as <prefix>.json (header) plus CSV blocks
/// <prefix>_u.csv, <prefix>_v.csv, <prefix>_udual.csv, <prefix>_kappa.csv and,
/// when the forward operator has a dense representation, <prefix>_a.csv.
inline void save_dfd(const DFD& d, const std::string& prefix) {
  nlohmann::json header;
  header["domain_dim"] = d.u.ambient_dim();
  header["data_dim"] = d.v.ambient_dim();
  header["count"] = d.count();
  header["tol_dfd"] = d.tol_dfd;
  header["blocks"] = {{"u", prefix + "_u.csv"},
                      {"v", prefix + "_v.csv"},
                      {"u_dual", prefix + "_udual.csv"},
                      {"kappa", prefix + "_kappa.csv"}};
  const bool has_dense = static_cast<bool>(d.forward.dense);
  if (has_dense) header["blocks"]["forward"] = prefix + "_a.csv";
  std::ofstream out(prefix + ".json");
  DFD_ENSURE(out.good(), "save_dfd: cannot open ", prefix, ".json");
  out << header.dump(2) << '\n';
  write_csv(prefix + "_u.csv", d.u.vectors);
  write_csv(prefix + "_v.csv", d.v.vectors);
  write_csv(prefix + "_udual.csv", d.u_dual.vectors);
  write_csv(prefix + "_kappa.csv", Vec(d.kappa));
  if (has_dense) write_csv(prefix + "_a.csv", *d.forward.dense);
}

/// Reads back a decomposition written by save_dfd. The forward operator is
/// restored only when the dense block was written.
inline DFD load_dfd(const std::string& prefix) {
  std::ifstream in(prefix + ".json");
  DFD_REQUIRE(in.good(), "load_dfd: cannot open ", prefix, ".json");
  nlohmann::json header = nlohmann::json::parse(in);
  DFD d;
  d.tol_dfd = header.at("tol_dfd").get<double>();
  d.u = Frame(read_csv_matrix(header.at("blocks").at("u").get<std::string>()));
  d.v = Frame(read_csv_matrix(header.at("blocks").at("v").get<std::string>()));
  d.u_dual = Frame(read_csv_matrix(header.at("blocks").at("u_dual").get<std::string>()));
  d.kappa = read_csv_vector(header.at("blocks").at("kappa").get<std::string>());
  if (header.at("blocks").contains("forward")) {
    d.forward =
        LinearOperator::from_matrix(read_csv_matrix(header.at("blocks").at("forward").get<std::string>()));
  }
  DFD_ENSURE(d.count() == header.at("count").get<int>(), "load_dfd: block size mismatch");
  return d;
}

}  // namespace dfd
