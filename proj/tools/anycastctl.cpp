// anycastctl: command-line front end for the anycast defense toolkit.

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "anycast/anycast.hpp"
#include "anycast/http.hpp"
#include "anycast/plot.hpp"

using namespace anycast;
namespace fs = std::filesystem;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::map<std::string, double> parse_capacities(const std::vector<std::string>& specs) {
  std::map<std::string, double> out;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("capacity must be SITE=rate, got " + s);
    const double v = util::parse_double(s.substr(eq + 1), "capacity " + s);
    if (!(v > 0)) throw ValidationError("capacity must be positive: " + s);
    out[s.substr(0, eq)] = v;
  }
  return out;
}

std::string pct(double f) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << f * 100 << '%';
  return os.str();
}

// ---------------------------------------------------------------------------

int cmd_topo_validate(const std::string& path, bool as_json) {
  const auto g = load_topology(path);
  const auto m = map_catchment(g, baseline_policy(g));
  json j{{"valid", true},
         {"nodes", g.nodes().size()},
         {"links", g.links().size()},
         {"sites", g.site_ids()},
         {"clients", g.clients().size()},
         {"baseline", catchment_summary(m)}};
  if (as_json) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "ok: " << g.nodes().size() << " ASes, " << g.links().size() << " links, " << g.sites().size()
              << " sites, " << g.clients().size() << " blocks\n";
    for (const auto& [site, f] : m.fractions) std::cout << "  " << site << " " << pct(f) << '\n';
    if (m.unreachable) std::cout << "  warning: " << m.unreachable << " blocks unreachable under baseline\n";
  }
  return 0;
}

int cmd_topo_generate(const GeneratorSpec& spec, const std::string& out, bool as_json) {
  const auto g = generate_topology(spec);
  if (out.empty() || out == "-")
    std::cout << to_json(g).dump(2) << '\n';
  else
    save_topology(g, out);
  if (as_json && !out.empty() && out != "-")
    std::cout << json{{"out", out}, {"nodes", g.nodes().size()}, {"links", g.links().size()}}.dump() << '\n';
  return 0;
}

PolicyConfig policy_arg(const AsGraph& g, const std::string& policy_path) {
  if (policy_path.empty()) return baseline_policy(g);
  return policy_from_json(read_json(policy_path));
}

int cmd_map(const std::string& topo, const std::string& policy, const std::string& out, bool as_json) {
  const auto g = load_topology(topo);
  const auto c = policy_arg(g, policy);
  validate_policy(g, c);
  const auto m = map_catchment(g, c);
  if (!out.empty()) write_text(out, catchment_csv(m));
  if (as_json)
    std::cout << catchment_summary(m).dump(2) << '\n';
  else if (out.empty())
    std::cout << catchment_csv(m);
  else
    for (const auto& [site, f] : m.fractions) std::cout << site << " " << pct(f) << '\n';
  return 0;
}

int cmd_diff(const std::string& a, const std::string& b, bool as_json) {
  const auto d = diff_catchments(load_catchment_csv(a), load_catchment_csv(b));
  if (as_json) {
    std::cout << json{{"changed", d.changed.size()}, {"changed_fraction", d.changed_fraction}, {"blocks", d.changed}}
                     .dump(2)
              << '\n';
  } else {
    std::cout << "changed " << d.changed.size() << " changed_fraction " << std::setprecision(17) << d.changed_fraction
              << '\n';
  }
  return 0;
}

int cmd_playbook_build(const std::string& topo, const std::string& menu, const std::string& fractions,
                       const std::string& out, bool as_json) {
  Playbook pb;
  if (!fractions.empty()) {
    json j = read_json(fractions);
    j["format"] = "anycast-playbook";
    j["version"] = kPlaybookFormatVersion;
    j.erase("index");
    pb = playbook_from_json(j);
  } else {
    if (topo.empty() || menu.empty()) throw CLI::ValidationError("playbook build", "needs --topo and --menu, or --fractions");
    const auto g = load_topology(topo);
    const auto configs = enumerate_policies(g, menu_from_json(g, read_json(menu)));
    pb = build_playbook(g, configs);
  }
  save_playbook(pb, out);
  if (as_json) {
    json j{{"out", out}, {"entries", pb.entries().size()}, {"options_count", json::object()}};
    for (const auto& s : pb.sites()) j["options_count"][s] = pb.options_count(s);
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "wrote " << pb.entries().size() << " entries to " << out << '\n';
    for (const auto& s : pb.sites()) std::cout << "  " << s << " traffic options " << pb.options_count(s) << '\n';
  }
  return 0;
}

int cmd_playbook_lookup(const std::string& path, const std::string& site, std::optional<double> lo,
                        std::optional<double> hi, const std::string& bin, bool as_json) {
  const auto pb = load_playbook(path);
  std::set<std::string> ids;
  if (!bin.empty()) {
    const auto& labels = bin_labels();
    if (std::find(labels.begin(), labels.end(), bin) == labels.end()) throw RangeError("unknown bin " + bin);
    ids = pb.policies_in_bin(site, bin);
  } else {
    ids = lookup_options(pb, {{site, {lo.value_or(0.0), hi.value_or(1.0)}}}, pb.default_view());
  }
  if (as_json) {
    json arr = json::array();
    for (const auto& id : ids) {
      const auto& e = pb.entry(id);
      arr.push_back({{"policy_id", id}, {"label", e.config.label}, {"fractions", e.fractions}, {"bins", e.bins}});
    }
    std::cout << json{{"site", site}, {"options", arr}}.dump(2) << '\n';
  } else {
    for (const auto& id : ids) std::cout << id << '\n';
  }
  return 0;
}

int cmd_playbook_show(const std::string& path, bool as_json) {
  const auto pb = load_playbook(path);
  if (as_json) {
    std::cout << playbook_view(pb).dump(2) << '\n';
    return 0;
  }
  std::cout << std::left << std::setw(28) << "policy";
  for (const auto& s : pb.sites()) std::cout << std::setw(9) << s;
  std::cout << "label\n";
  for (const auto& e : pb.entries()) {
    std::cout << std::setw(28) << e.policy_id();
    for (const auto& s : pb.sites()) std::cout << std::setw(9) << pct(e.fractions.at(s));
    std::cout << e.config.label << '\n';
  }
  std::cout << "traffic options:";
  for (const auto& s : pb.sites()) std::cout << ' ' << s << '=' << pb.options_count(s);
  std::cout << '\n';
  return 0;
}

int cmd_estimate(const std::string& trace, const std::vector<std::string>& known, std::optional<double> until,
                 double window, bool pooled, bool as_json) {
  const auto rows = load_ingest_csv(trace);
  std::map<std::string, double> expected = parse_capacities(known);
  if (expected.empty()) {
    if (!until) throw CLI::ValidationError("estimate", "needs --known-offered SITE=rate or --baseline-until T");
    expected = known_good_baseline(rows, *until);
  }
  const auto obs = ingest_observations(rows, [&](const std::string& site, double) {
    auto it = expected.find(site);
    return it == expected.end() ? 0.0 : it->second;
  });
  WindowConfig cfg;
  cfg.length = window;
  if (pooled) cfg.aggregation = WindowAggregation::pooled;
  const auto series = estimate_series(obs, cfg);
  if (as_json) {
    json arr = json::array();
    for (const auto& r : series)
      arr.push_back({{"site_id", r.site_id},
                     {"window_start", r.window_start},
                     {"window_end", r.window_end},
                     {"alpha", r.alpha},
                     {"t_observed", r.t_observed},
                     {"t_offered_hat", r.t_offered_hat},
                     {"confidence", to_string(r.confidence)}});
    std::cout << arr.dump(2) << '\n';
  } else {
    std::cout << "site,window_start,window_end,alpha,t_observed,t_offered_hat,confidence\n";
    for (const auto& r : series)
      std::cout << r.site_id << ',' << r.window_start << ',' << r.window_end << ',' << r.alpha << ',' << r.t_observed
                << ',' << r.t_offered_hat << ',' << to_string(r.confidence) << '\n';
  }
  return 0;
}

struct ReplayArgs {
  std::string scenario, topo, playbook, trace, trace_spec, options, out, plot_dir, data_dir, controller = "on";
  std::vector<std::string> capacity;
};

int cmd_replay(const ReplayArgs& a, bool as_json) {
  ScenarioBundle b;
  if (!a.scenario.empty()) b = load_scenario_bundle(a.scenario);
  if (!a.topo.empty()) b.graph = load_topology(a.topo);
  if (!a.playbook.empty()) b.playbook = load_playbook(a.playbook);
  double spec_duration = 0;
  if (!a.trace.empty()) {
    b.trace = load_trace_csv(a.trace);
  } else if (!a.trace_spec.empty()) {
    const auto spec = trace_spec_from_json(read_json(a.trace_spec));
    b.trace = synthesize_trace(spec);
    spec_duration = spec.duration;
  }
  if (a.scenario.empty() && (a.topo.empty() || a.playbook.empty() || (a.trace.empty() && a.trace_spec.empty())))
    throw CLI::ValidationError("replay", "needs --scenario, or --topo, --playbook and --trace/--trace-spec");
  const auto& g = b.graph;
  const auto& pb = b.playbook;
  const auto& trace = b.trace;
  ReplayOptions opt = b.options;
  if (!a.options.empty()) opt = replay_options_from_json(read_json(a.options), opt);
  for (const auto& [s, c] : parse_capacities(a.capacity)) opt.capacities[s] = c;
  if (!(opt.duration > 0)) opt.duration = spec_duration;
  if (a.controller != "on" && a.controller != "off") throw CLI::ValidationError("--controller", "must be on or off");
  opt.controller_enabled = a.controller == "on";

  const auto report = run_scenario(g, pb, trace, opt);
  const json rj = to_json(report);
  if (!a.out.empty()) write_text(a.out, rj.dump(2) + "\n");
  if (!a.plot_dir.empty()) {
    fs::create_directories(a.plot_dir);
    for (const auto& s : pb.sites()) write_text((fs::path(a.plot_dir) / (s + ".svg")).string(), render_site_svg(report, s));
  }
  std::optional<std::string> run_id;
  if (!a.data_dir.empty()) {
    RunStore store(a.data_dir);
    RunRecord r;
    r.inputs = hash_inputs(g, pb, trace, opt);
    r.options = to_json(opt);
    r.report = report;
    r.created_at = util::format_utc(util::now_unix());
    run_id = store.save(std::move(r)).run_id;
  }
  if (as_json) {
    json j{{"outcome", to_string(report.outcome)}, {"actions", rj["actions"]}};
    if (run_id) j["run_id"] = *run_id;
    if (a.out.empty()) j["report"] = rj;
    std::cout << j.dump(2) << '\n';
  } else {
    for (const auto& act : report.actions)
      std::cout << "t=" << act.time << " " << act.trigger << " deploy " << act.policy_id << " (effective "
                << act.effective_at << ")\n";
    std::cout << "outcome " << to_string(report.outcome) << '\n';
    if (run_id) std::cout << "run " << *run_id << '\n';
  }
  return 0;
}

httplib::Server* g_server = nullptr;

int cmd_serve(const std::string& config, const std::string& bind) {
  if (!bind.empty()) setenv(kBindEnv, bind.c_str(), 1);
  const auto cfg = load_config(config);
  auto svc = Service::from_config(cfg);
  httplib::Server srv;
  mount(srv, *svc);
  g_server = &srv;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::cerr << "listening on " << cfg.bind << '\n';
  if (!srv.listen(cfg.host(), cfg.port())) {
    std::cerr << "error: cannot bind " << cfg.bind << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anycastctl: anycast routing playbooks, load estimation and DDoS response replay"};
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "machine-readable output");

  auto* topo = app.add_subcommand("topo", "validate or generate topologies")->require_subcommand(1);
  std::string topo_path;
  auto* tv = topo->add_subcommand("validate", "check a topology file");
  tv->add_option("path", topo_path, "topology file")->required();
  GeneratorSpec gen;
  std::string gen_out;
  auto* tg = topo->add_subcommand("generate", "generate a synthetic topology");
  tg->add_option("--seed", gen.seed, "RNG seed")->required();
  tg->add_option("--out", gen_out, "output path (default stdout)");
  tg->add_option("--tier1", gen.n_tier1)->capture_default_str();
  tg->add_option("--mid", gen.n_mid)->capture_default_str();
  tg->add_option("--stub", gen.n_stub)->capture_default_str();
  tg->add_option("--clients", gen.n_clients)->capture_default_str();
  tg->add_option("--sites", gen.n_sites)->capture_default_str();

  std::string map_topo, map_policy, map_out;
  auto* mp = app.add_subcommand("map", "compute a catchment map");
  mp->add_option("--topo", map_topo)->required();
  mp->add_option("--policy", map_policy, "policy config JSON (default baseline)");
  mp->add_option("--out", map_out, "write block_id,site_id CSV here");

  std::string diff_a, diff_b;
  auto* df = app.add_subcommand("diff", "compare two catchment maps");
  df->add_option("--a", diff_a)->required();
  df->add_option("--b", diff_b)->required();

  auto* pbc = app.add_subcommand("playbook", "build and query playbooks")->require_subcommand(1);
  std::string pb_topo, pb_menu, pb_fractions, pb_out;
  auto* pbb = pbc->add_subcommand("build", "measure every menu policy and index the result");
  pbb->add_option("--topo", pb_topo);
  pbb->add_option("--menu", pb_menu);
  pbb->add_option("--fractions", pb_fractions, "inject measured fractions instead of simulating");
  pbb->add_option("--out", pb_out)->required();
  std::string pb_path = "playbook.json", pb_site, pb_bin;
  std::optional<double> pb_min, pb_max;
  auto* pbl = pbc->add_subcommand("lookup", "policies giving a site a traffic share");
  pbl->add_option("--playbook", pb_path)->capture_default_str();
  pbl->add_option("--site", pb_site)->required();
  pbl->add_option("--min", pb_min);
  pbl->add_option("--max", pb_max);
  pbl->add_option("--bin", pb_bin, "e.g. 60-70");
  auto* pbs = pbc->add_subcommand("show", "print the playbook table");
  pbs->add_option("--playbook", pb_path)->capture_default_str();

  std::string est_trace;
  std::vector<std::string> est_known;
  std::optional<double> est_until;
  double est_window = 60.0;
  bool est_pooled = false;
  auto* est = app.add_subcommand("estimate", "offered-load estimates from an ingest CSV");
  est->add_option("--trace", est_trace, "t,site_id,src_id,rate,is_known_good")->required();
  est->add_option("--known-offered", est_known, "SITE=rate expected known-good");
  est->add_option("--baseline-until", est_until, "derive expected known-good from samples before T");
  est->add_option("--window", est_window)->capture_default_str();
  est->add_flag("--pooled", est_pooled, "pooled ratio instead of per-sample mean");

  ReplayArgs ra;
  auto* rp = app.add_subcommand("replay", "replay an attack trace");
  rp->add_option("--scenario", ra.scenario, "scenario bundle JSON");
  rp->add_option("--topo", ra.topo);
  rp->add_option("--playbook", ra.playbook);
  rp->add_option("--trace", ra.trace, "t,src,rate,class CSV");
  rp->add_option("--trace-spec", ra.trace_spec, "synthesize the trace from this JSON spec");
  rp->add_option("--options", ra.options, "replay options JSON");
  rp->add_option("--capacity", ra.capacity, "SITE=rate");
  rp->add_option("--controller", ra.controller, "on|off")->capture_default_str();
  rp->add_option("--out", ra.out, "write the report JSON here");
  rp->add_option("--plot-dir", ra.plot_dir, "write one SVG per site here");
  rp->add_option("--data-dir", ra.data_dir, "persist a run record here");

  std::string serve_config, serve_bind;
  auto* sv = app.add_subcommand("serve", "run the HTTP API");
  sv->add_option("--config", serve_config, "config JSON (default $ANYCAST_CONFIG)");
  sv->add_option("--bind", serve_bind, "host:port (overrides config and $ANYCAST_BIND)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*tv) return cmd_topo_validate(topo_path, as_json);
    if (*tg) return cmd_topo_generate(gen, gen_out, as_json);
    if (*mp) return cmd_map(map_topo, map_policy, map_out, as_json);
    if (*df) return cmd_diff(diff_a, diff_b, as_json);
    if (*pbb) return cmd_playbook_build(pb_topo, pb_menu, pb_fractions, pb_out, as_json);
    if (*pbl) return cmd_playbook_lookup(pb_path, pb_site, pb_min, pb_max, pb_bin, as_json);
    if (*pbs) return cmd_playbook_show(pb_path, as_json);
    if (*est) return cmd_estimate(est_trace, est_known, est_until, est_window, est_pooled, as_json);
    if (*rp) return cmd_replay(ra, as_json);
    if (*sv) return cmd_serve(serve_config, serve_bind);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
