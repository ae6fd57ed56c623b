// isokit command-line front end: alignment, correspondence, extensions,
// sphere generation, configuration metrics, and map audits.
//
// Exit codes: 0 success, 1 error, 2 refusal (orientation-conflict results
// are first-class outcomes, not failures).

#include "isokit/correspondence.hpp"
#include "isokit/equidist.hpp"
#include "isokit/extend_finite.hpp"
#include "isokit/io.hpp"
#include "isokit/whitney.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace isokit;

namespace {

fs::path output_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("ISOKIT_OUT_DIR")) return env;
  return ".";
}

void emit(const Json& j, const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  write_json_file(j, dir / name);
  std::cout << j.dump(2) << "\n";
}

Json motion_json(const EuclideanMotion& motion) {
  Json lin = Json::array();
  for (Eigen::Index r = 0; r < motion.linear.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < motion.linear.cols(); ++c) {
      row.push_back(motion.linear(r, c));
    }
    lin.push_back(row);
  }
  Json trans = Json::array();
  for (Eigen::Index i = 0; i < motion.translation.size(); ++i) {
    trans.push_back(motion.translation[i]);
  }
  return Json{{"linear", lin}, {"translation", trans}, {"proper", motion.proper}};
}

Manifold manifold_from_name(const std::string& name) {
  if (name == "torus") return Manifold::torus();
  if (name.rfind("sphere", 0) == 0) {
    const int d = std::stoi(name.substr(6));
    return Manifold::sphere(d);
  }
  throw Error("unknown manifold '" + name + "' (sphereD or torus)");
}

SmoothMap map_from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  Json j;
  in >> j;
  return SmoothMap::from_json(j);
}

std::vector<Vec> plot_samples(const SmoothMap& map, const Region& region, int n,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vec> samples;
  samples.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) samples.push_back(region.sample(rng));
  (void)map;
  return samples;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"near-isometry toolkit: alignment, extension, equidistribution"};
  app.require_subcommand(1);
  app.fallthrough();  // parent options (--out) may follow the subcommand

  std::string out_flag;
  app.add_option("--out", out_flag, "output directory (or ISOKIT_OUT_DIR)");

  // --- align ---------------------------------------------------------------
  auto* align = app.add_subcommand("align", "Procrustes alignment of labeled configs");
  std::string align_p, align_q;
  bool align_proper = false;
  align->add_option("P", align_p, "first point file")->required();
  align->add_option("Q", align_q, "second point file")->required();
  align->add_flag("--proper", align_proper, "require an orientation-preserving motion");

  // --- match ---------------------------------------------------------------
  auto* match = app.add_subcommand("match", "unlabeled correspondence search");
  std::string match_p, match_q, match_method = "graph";
  double match_eps = 0.0;
  match->add_option("P", match_p)->required();
  match->add_option("Q", match_q)->required();
  match->add_option("--epsilon", match_eps, "pairwise distortion bound E");
  match->add_option("--method", match_method, "tenstep|graph")
      ->check(CLI::IsMember({"tenstep", "graph"}));

  // --- extend-finite ---------------------------------------------------------
  auto* extf = app.add_subcommand("extend-finite",
                                  "extend a finite near-isometry to a global map");
  std::string extf_e, extf_z;
  double extf_eps = 0.05;
  int extf_properness = 0;
  double extf_ck = -1.0, extf_ckp = -1.0;
  std::uint64_t extf_seed = 20177;
  extf->add_option("E", extf_e, "domain points")->required();
  extf->add_option("F", extf_z, "image points")->required();
  extf->add_option("--epsilon", extf_eps, "target distortion");
  extf->add_option("--properness", extf_properness,
                   "K bound: use the orientation-aware pipeline");
  extf->add_option("--ck", extf_ck, "C_K in delta = exp(-C_K/eps); default 5+K");
  extf->add_option("--ck-prime", extf_ckp,
                   "C'_K in eta = exp(-C'_K/eps); default 5+K");
  extf->add_option("--seed", extf_seed, "audit seed");

  // --- extend-smooth ----------------------------------------------------------
  auto* exts = app.add_subcommand("extend-smooth",
                                  "extend a smooth distortion off a compact set");
  std::string exts_set, exts_map;
  double exts_eps = 1e-2, exts_eta = 0.0;
  exts->add_option("--set", exts_set, "set descriptor JSON")->required();
  exts->add_option("--map", exts_map, "map descriptor JSON")->required();
  exts->add_option("--epsilon", exts_eps, "distortion budget");
  exts->add_option("--eta", exts_eta, "inner cutoff scale (0 = default)");

  // --- sphere-gen ---------------------------------------------------------------
  auto* gen = app.add_subcommand("sphere-gen", "well-distributed spherical points");
  std::vector<std::int64_t> gen_ff;
  std::vector<double> gen_riesz;
  std::uint64_t gen_seed = 1;
  int gen_restarts = 1, gen_iters = 1200;
  gen->add_option("--finite-field", gen_ff, "D p")->expected(2);
  gen->add_option("--riesz", gen_riesz, "D k s")->expected(3);
  gen->add_option("--seed", gen_seed, "optimizer seed");
  gen->add_option("--restarts", gen_restarts, "optimizer restarts");
  gen->add_option("--iters", gen_iters, "optimizer iteration cap");

  // --- metrics ----------------------------------------------------------------
  auto* met = app.add_subcommand("metrics", "separation / mesh norm / mesh ratio");
  std::string met_points, met_manifold = "sphere2";
  int met_dense = 200000, met_design = -1;
  met->add_option("points", met_points)->required();
  met->add_option("--manifold", met_manifold, "sphereD or torus");
  met->add_option("--dense", met_dense, "dense cover size");
  met->add_option("--design", met_design, "also run the design test up to t");

  // --- audit ------------------------------------------------------------------
  auto* aud = app.add_subcommand("audit", "distortion audit of a map JSON");
  std::string aud_map, aud_plot;
  std::vector<double> aud_ball, aud_box;
  int aud_samples = 512;
  std::uint64_t aud_seed = 7;
  int aud_bmo = 0;
  aud->add_option("map", aud_map, "map JSON file")->required();
  aud->add_option("--ball", aud_ball, "center coords then radius");
  aud->add_option("--box", aud_box, "lo coords then hi coords");
  aud->add_option("--samples", aud_samples, "audit sample count");
  aud->add_option("--seed", aud_seed, "audit seed");
  aud->add_option("--bmo", aud_bmo, "also run the rotation audit at this grid size");
  aud->add_option("--plot-data", aud_plot, "write sampled map images as TSV");

  CLI11_PARSE(app, argc, argv);
  const fs::path dir = output_dir(out_flag);

  try {
    if (*align) {
      const auto p = parse_point_file(align_p);
      const auto q = parse_point_file(align_q);
      for (const auto& w : p.warnings) std::cerr << "warning: " << w << "\n";
      Json j{{"schemaVersion", kSchemaVersion}};
      if (align_proper) {
        const auto fit = fit_euclidean_motion(p.config, q.config, true);
        j["motion"] = motion_json(fit.motion);
        j["max_point_error"] = fit.max_point_error;
      } else {
        const auto result = orthogonal_procrustes(p.config, q.config);
        j["motion"] = motion_json(result.motion);
        j["residual"] = result.residual;
      }
      emit(j, dir, "align.json");
      return 0;
    }

    if (*match) {
      const auto p = parse_point_file(match_p);
      const auto q = parse_point_file(match_q);
      ToleranceModel tol;
      tol.E = match_eps;
      const auto results = correspondence_search(
          p.config, q.config, tol,
          match_method == "tenstep" ? SearchMethod::TenStep
                                    : SearchMethod::GraphBacktrack);
      Json arr = Json::array();
      for (const auto& c : results) arr.push_back(c.to_json());
      Json j{{"schemaVersion", kSchemaVersion},
             {"method", match_method},
             {"epsilon", match_eps},
             {"correspondences", arr}};
      const auto multiset =
          distance_multiset_compare(p.config, q.config,
                                    match_eps > 0 ? match_eps : 1e-9);
      j["distance_multiset_equal"] = multiset.equal;
      emit(j, dir, "match.json");
      return 0;
    }

    if (*extf) {
      const auto e = parse_point_file(extf_e);
      const auto z = parse_point_file(extf_z);
      ExtensionResult result;
      if (extf_properness > 0) {
        PropernessOptions opt;
        opt.audit_seed = extf_seed;
        opt.c_k = extf_ck;
        opt.c_k_prime = extf_ckp;
        result = extend_with_properness(e.config, z.config, extf_eps,
                                        extf_properness, opt);
      } else {
        ExtendOptions opt;
        opt.audit_seed = extf_seed;
        result = extend_finite(e.config, z.config, extf_eps, opt);
      }
      emit(result.to_json(), dir, "extension.json");
      if (result.refusal) {
        std::cerr << "refusal: the correspondence carries both an orientation-"
                     "preserving and an orientation-reversing block; no "
                     "extension at this distortion exists\n";
        return 2;
      }
      return 0;
    }

    if (*exts) {
      std::ifstream set_in(exts_set);
      if (!set_in) throw ParseError("cannot open '" + exts_set + "'");
      Json set_json;
      set_in >> set_json;
      const auto set = AdmissibleSet::from_json(set_json);
      const auto phi = map_from_file(exts_map);
      const auto ext = whitney_extend(set, phi, exts_eps, exts_eta);
      Json j{{"schemaVersion", kSchemaVersion},
             {"ok", ext.report.ok},
             {"report",
              Json{{"phi_audit", ext.report.phi_audit},
                   {"partition_defect", ext.report.partition_defect},
                   {"max_overlap", ext.report.max_overlap},
                   {"consistency_constant", ext.report.consistency_constant},
                   {"near_agreement", ext.report.near_agreement},
                   {"far_agreement", ext.report.far_agreement},
                   {"jacobian_defect", ext.report.jacobian_defect},
                   {"failure", ext.report.failure}}}};
      if (ext.report.ok) j["map"] = ext.map.to_json();
      emit(j, dir, "whitney.json");
      return ext.report.ok ? 0 : 1;
    }

    if (*gen) {
      if (!gen_ff.empty()) {
        const auto ff = finite_field_sphere(static_cast<int>(gen_ff[0]), gen_ff[1]);
        fs::create_directories(dir);
        write_point_csv(ff.config, dir / "points.csv");
        Json j{{"schemaVersion", kSchemaVersion},
               {"generator", "finite-field"},
               {"D", gen_ff[0]},
               {"p", gen_ff[1]},
               {"count", ff.count},
               {"formula_count", ff.formula_count},
               {"design3_defect", design_test(ff.config, 3)}};
        emit(j, dir, "sphere-gen.json");
        return 0;
      }
      if (!gen_riesz.empty()) {
        const int d = static_cast<int>(gen_riesz[0]);
        const int k = static_cast<int>(gen_riesz[1]);
        const double s = gen_riesz[2];
        const auto opt = optimize_config(Manifold::sphere(d), k, s, gen_iters,
                                         gen_seed, gen_restarts);
        fs::create_directories(dir);
        write_point_csv(opt.config, dir / "points.csv");
        Json j{{"schemaVersion", kSchemaVersion},
               {"generator", "riesz"},
               {"D", d},
               {"k", k},
               {"s", s},
               {"seed", opt.report.seed},
               {"restarts", opt.report.restarts},
               {"energy", opt.report.energy},
               {"gradient_norm", opt.report.gradient_norm},
               {"iterations", opt.report.iterations}};
        emit(j, dir, "sphere-gen.json");
        return 0;
      }
      std::cerr << "sphere-gen needs --finite-field or --riesz\n";
      return 1;
    }

    if (*met) {
      const auto pts = parse_point_file(met_points);
      const auto manifold = manifold_from_name(met_manifold);
      const auto metrics = config_metrics(manifold, pts.config, met_dense);
      Json j{{"schemaVersion", kSchemaVersion},
             {"min_distance", metrics.min_distance},
             {"separation_radius", metrics.separation_radius},
             {"mesh_norm", metrics.mesh_norm},
             {"mesh_ratio", metrics.mesh_ratio},
             {"dense_n", metrics.dense_n}};
      if (met_design > 0) {
        j["design_defect"] = design_test(pts.config, met_design);
        j["design_t"] = met_design;
      }
      emit(j, dir, "metrics.json");
      return 0;
    }

    if (*aud) {
      const auto map = map_from_file(aud_map);
      Region region = Region::ball(Vec::Zero(map.dim()), 1.0);
      if (!aud_ball.empty()) {
        if (static_cast<int>(aud_ball.size()) != map.dim() + 1) {
          throw ParseError("--ball needs D coords plus a radius");
        }
        Vec c(map.dim());
        for (int i = 0; i < map.dim(); ++i) c[i] = aud_ball[static_cast<std::size_t>(i)];
        region = Region::ball(c, aud_ball.back());
      } else if (!aud_box.empty()) {
        if (static_cast<int>(aud_box.size()) != 2 * map.dim()) {
          throw ParseError("--box needs D lo coords then D hi coords");
        }
        Vec lo(map.dim()), hi(map.dim());
        for (int i = 0; i < map.dim(); ++i) {
          lo[i] = aud_box[static_cast<std::size_t>(i)];
          hi[i] = aud_box[static_cast<std::size_t>(i + map.dim())];
        }
        region = Region::box(lo, hi);
      }
      const auto audit = distortion_audit(map, region, aud_samples, aud_seed);
      Json j{{"schemaVersion", kSchemaVersion},
             {"samples", aud_samples},
             {"seed", aud_seed},
             {"sup_jacobian_defect", audit.sup_jacobian_defect},
             {"sup_pair_ratio_defect", audit.sup_pair_ratio_defect},
             {"claimed_epsilon", map.claimed_epsilon()}};
      if (aud_bmo > 0) {
        const Vec center =
            region.kind == Region::Kind::Ball ? region.center
                                              : Vec(0.5 * (region.lo + region.hi));
        const double radius = region.kind == Region::Kind::Ball
                                  ? region.radius
                                  : 0.5 * (region.hi - region.lo).minCoeff();
        const auto bmo = bmo_rotation_audit(map, center, radius, aud_bmo);
        j["bmo"] = Json{{"mean_residual", bmo.mean_residual},
                        {"tail_fractions", bmo.tail_fractions}};
      }
      if (!aud_plot.empty()) {
        fs::create_directories(dir);
        write_map_samples_tsv(map, plot_samples(map, region, aud_samples, aud_seed),
                              dir / aud_plot);
      }
      emit(j, dir, "audit.json");
      return 0;
    }
  } catch (const KExceedsD& e) {
    std::cerr << "error: " << e.what()
              << "\nhint: beyond k = D an orientation conflict can make the "
                 "extension impossible; use --properness K for the "
                 "block-aware pipeline\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
