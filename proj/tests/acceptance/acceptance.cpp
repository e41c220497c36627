// Acceptance gate: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria, not counting failures listed with
// --allow-fail=N[,M...] whose cause the criterion itself has proven.

#include <chrono>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "cli.hpp"
#include "support.hpp"

using namespace span2records;
using namespace span2records::testing;

namespace {

struct Verdict {
  bool pass = true;
  bool explained = false;  // every failing case has a proven cause
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::pair<int, int>> eoi_ess(const std::vector<kieker::OperationExecutionRecord>& rs) {
  std::vector<std::pair<int, int>> out;
  for (const auto& r : rs) out.emplace_back(r.eoi, r.ess);
  return out;
}

Verdict fig3() {
  Verdict v;
  TempDir dir;
  const auto json = (dir / "fig3.json").string();
  const auto log = (dir / "log").string();
  v.require(run_cli({"generate", "--pattern", "fig3", "--output", json}).code == 0, "generate failed");
  auto conv = run_cli({"convert", "--input", json, "--output", log});
  v.require(conv.code == 0, "convert failed: " + conv.err);
  v.require(conv.out.size() > 7 && conv.out.ends_with(" 5 async\n"), "report line: " + conv.out);
  const auto records = kieker::read_monitoring_log(log).records;
  v.require(eoi_ess(records) == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}, {2, 1}, {3, 2}, {4, 1}},
            "eoi/ess sequence differs");

  auto sync = run_cli({"analyze", "--input", log});
  v.require(sync.code == 2, "synchronous analysis exit " + std::to_string(sync.code));
  v.require(sync.err.find("--asynchronousTrace") != std::string::npos, "no flag guidance");

  const auto dot = (dir / "calltree.dot").string();
  auto async = run_cli({"analyze", "--input", log, "--asynchronousTrace", "--calltree", dot});
  v.require(async.code == 0, "asynchronous analysis failed: " + async.err);
  auto tree = build_call_tree(reconstruct_traces(records, ReconstructionMode::kAsynchronous));
  v.require(tree.nodes.size() == 6, "call tree has " + std::to_string(tree.nodes.size()) + " nodes");
  v.require(tree.nodes[0].children.size() == 1, "Entry must have one child");
  const std::string root = "root::root";
  for (const auto& call : {"S1::call1", "S2::call2", "S1::call3"}) {
    v.require(tree.find_path({root, call}).has_value(), std::string("missing root->") + call);
  }
  v.require(tree.find_path({root, "S2::call2", "S4::call4"}).has_value(), "missing call2->call4");
  v.require(slurp(dot) == emit_dot(tree), "calltree DOT differs from the in-memory tree");
  return v;
}

Verdict async_round_trip() {
  Verdict v;
  int sync = 0, failed = 0, failed_ambiguous = 0, ambiguous = 0;
  std::string first_failure;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    auto spec = random_spec(seed, 1 + (seed - 1) % 50, 0.3);
    auto forest = build_span_forest(synthetic::generate(spec)).front();
    auto conversion = assign_eoi_ess(forest);
    if (conversion.report.synchronous) ++sync;
    const bool amb = has_ambiguous_parent(forest);
    if (amb) ++ambiguous;
    std::string why;
    if (!same_structure(forest, reconstruct_trace(conversion.records, ReconstructionMode::kAsynchronous),
                        &why)) {
      ++failed;
      if (amb) ++failed_ambiguous;
      if (first_failure.empty()) first_failure = "seed " + std::to_string(seed) + ": " + why;
    }
  }
  std::ostringstream detail;
  detail << failed << "/200 not isomorphic (" << failed_ambiguous
         << " of them have a provably ambiguous parent; " << ambiguous
         << " forests ambiguous overall); mix " << sync << " sync / " << 200 - sync << " async";
  if (!first_failure.empty()) detail << "; first: " << first_failure;
  v.require(sync > 0 && sync < 200, "forests not mixed: " + detail.str());
  v.require(failed == 0, detail.str());
  v.explained = failed == failed_ambiguous;
  if (v.pass) v.detail = detail.str();
  return v;
}

Verdict sync_round_trip() {
  Verdict v;
  for (std::uint64_t seed = 1; seed <= 200 && v.pass; ++seed) {
    const std::string at = "seed " + std::to_string(seed) + ": ";
    auto forest = build_span_forest(synthetic::generate(random_spec(seed, 1 + (seed - 1) % 50, 0.0)))
                      .front();
    auto conversion = assign_eoi_ess(forest);
    v.require(conversion.report.synchronous, at + "not synchronous");
    std::string why;
    try {
      v.require(same_structure(forest,
                               reconstruct_trace(conversion.records, ReconstructionMode::kSynchronous),
                               &why),
                at + why);
    } catch (const InvalidSynchronousTrace& e) {
      v.require(false, at + e.what());
    }
    for (std::size_t k = 1; k < conversion.records.size(); ++k) {
      v.require(conversion.records[k].ess <= conversion.records[k - 1].ess + 1, at + "ess jump");
    }
  }
  return v;
}

Verdict field_mapping() {
  Verdict v;
  // The documented example, through the whole ingest path.
  auto parsed = parse_otlp_json(slurp(data_path("one_span.json")));
  v.require(parsed.spans.size() == 1, "fixture");
  auto conv = convert_spans(parsed.spans);
  v.require(conv.size() == 1 && conv[0].records.size() == 1, "conversion");
  if (v.pass) {
    const auto& r = conv[0].records[0];
    v.require(r.hostname == "127.0.0.1", "hostname " + r.hostname);
    v.require(r.tin == 100 && r.tout == 200, "timestamps");
    v.require(r.operation_signature == "GET /products/{id}", "signature");
  }

  std::mt19937_64 rng(2024);
  const char* values[] = {"127.0.0.1", "db.example", "", "10.0.0.1", "recommendation-service"};
  const char* names[] = {"GET /products", "", "a;b", "call\\1", "ünï"};
  for (int i = 0; i < 20000 && v.pass; ++i) {
    OtelSpan s = make_span(1 + rng() % 1000, std::nullopt, names[rng() % 5], rng() >> 2, 0);
    s.end_epoch_nanos = s.start_epoch_nanos + rng() % (static_cast<std::uint64_t>(INT64_MAX) -
                                                        s.start_epoch_nanos + 1);
    std::optional<std::string> peer, sock, service;
    if (rng() % 2) s.attributes["net.peer.name"] = *(peer = values[rng() % 5]);
    if (rng() % 2) s.attributes["net.sock.peer.addr"] = *(sock = values[rng() % 5]);
    if (rng() % 2) s.resource_attributes["service.name"] = *(service = values[rng() % 5]);
    if (rng() % 4 == 0) s.attributes["http.method"] = std::string("GET");
    const auto r = map_span_fields(s);
    std::string host = "unknown-host";
    for (const auto* candidate : {&service, &sock, &peer}) {
      if (*candidate && !(*candidate)->empty()) host = **candidate;
    }
    v.require(r.tin == static_cast<std::int64_t>(s.start_epoch_nanos), "tin");
    v.require(r.tout == static_cast<std::int64_t>(s.end_epoch_nanos), "tout");
    v.require(r.operation_signature == (s.name.empty() ? "<unnamed>" : s.name), "signature");
    v.require(r.hostname == host, "hostname " + r.hostname + " expected " + host);
  }
  return v;
}

Verdict monitoring_log_codec() {
  Verdict v;
  const auto created = std::chrono::system_clock::time_point(std::chrono::seconds(1704164645));
  const std::string data_file = "kieker-20240102-030405-UTC-001.dat";
  constexpr std::int64_t kTrace = -5190747959940069231;
  const std::vector<kieker::OperationExecutionRecord> golden = {
      make_record("GET /products/{id}", 0, 1000, 0, 0, "product-service", kTrace),
      make_record("query;limit=5", 100, 400, 1, 1, "db\\primary", kTrace),
      make_record("multi\nline", 200, 900, 2, 1, "127.0.0.1", kTrace),
  };
  TempDir dir;
  kieker::write_monitoring_log(golden, dir / "golden", created);
  v.require(slurp(dir / "golden" / data_file) == slurp(data_path("golden_log/" + data_file)),
            "data file bytes differ from golden");
  v.require(slurp(dir / "golden" / "kieker.map") == slurp(data_path("golden_log/kieker.map")),
            "map file bytes differ from golden");

  std::mt19937_64 rng(77);
  const std::string alphabet = "abc;\\\n <>()/:.-_09";
  auto text = [&] {
    std::string s;
    for (std::size_t n = rng() % 16; n > 0; --n) s.push_back(alphabet[rng() % alphabet.size()]);
    return s;
  };
  for (int round = 0; round < 200 && v.pass; ++round) {
    std::vector<kieker::OperationExecutionRecord> records;
    for (std::size_t n = rng() % 30; n > 0; --n) {
      kieker::OperationExecutionRecord r;
      r.logging_timestamp = static_cast<std::int64_t>(rng());
      r.operation_signature = text();
      if (rng() % 3 == 0) r.session_id = text();
      r.trace_id = static_cast<std::int64_t>(rng());
      r.tin = static_cast<std::int64_t>(rng());
      r.tout = static_cast<std::int64_t>(rng());
      r.hostname = text();
      r.eoi = static_cast<std::int32_t>(rng());
      r.ess = static_cast<std::int32_t>(rng());
      records.push_back(std::move(r));
    }
    const auto a = dir / ("a" + std::to_string(round));
    const auto b = dir / ("b" + std::to_string(round));
    kieker::write_monitoring_log(records, a, created);
    const auto read = kieker::read_monitoring_log(a);
    v.require(read.records == records, "read(write(R)) != R in round " + std::to_string(round));
    kieker::write_monitoring_log(read.records, b, created);
    v.require(slurp(a / data_file) == slurp(b / data_file) &&
                  slurp(a / "kieker.map") == slurp(b / "kieker.map"),
              "write-read-write bytes differ in round " + std::to_string(round));
  }
  return v;
}

Verdict ingest_equivalence() {
  Verdict v;
  std::size_t spans = 0;
  for (const char* name : {"one_span", "two_resources", "two_service", "random_request", "empty_request"}) {
    const auto json = parse_otlp_json(slurp(data_path(std::string(name) + ".json")));
    const auto bin = parse_otlp_protobuf(std::string_view(slurp(data_path(std::string(name) + ".binpb"))));
    v.require(json.spans == bin.spans, std::string(name) + ": span lists differ");
    v.require(json.skipped_spans == bin.skipped_spans, std::string(name) + ": skip counts differ");
    spans += json.spans.size();
  }
  if (v.pass) v.detail = std::to_string(spans) + " spans across 5 fixture pairs";
  return v;
}

Verdict receiver() {
  Verdict v;
  TempDir dir;
  auto spans = synthetic::generate(synthetic::GeneratorSpec{.pattern = synthetic::Pattern::kFig3});
  const std::vector<OtelSpan> first(spans.begin(), spans.begin() + 2);
  const std::vector<OtelSpan> second(spans.begin() + 2, spans.end());

  std::ostringstream out, err;
  auto log = cli::make_logger(err);
  cli::ReceiveConfig cfg;
  cfg.listen = "127.0.0.1:0";
  cfg.output = dir / "recv";
  cfg.completion_timeout_seconds = 0.3;
  std::stop_source stop;
  std::promise<int> ready;
  std::thread server([&] {
    try {
      cli::run_receive(cfg, stop.get_token(), out, *log, [&](int port) { ready.set_value(port); });
    } catch (...) {
      ready.set_exception(std::current_exception());
    }
  });
  try {
    const int port = ready.get_future().get();
    httplib::Client client("127.0.0.1", port);
    auto r1 = client.Post(std::string(kTracesPath), to_otlp_json(first), "application/json");
    auto r2 = client.Post(std::string(kTracesPath), to_otlp_json(second), "application/json");
    v.require(r1 && r1->status == 200 && r2 && r2->status == 200, "POST rejected");
    // Wait for the flush without stopping the receiver.
    std::size_t seen = 0;
    for (int i = 0; i < 200 && seen == 0; ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(25));
      seen = kieker::read_monitoring_log(cfg.output).records.size();
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(400));
    const auto records = kieker::read_monitoring_log(cfg.output).records;
    v.require(records.size() == 5, "log has " + std::to_string(records.size()) + " records");
    auto traces = reconstruct_traces(records, ReconstructionMode::kAsynchronous);
    v.require(traces.size() == 1, "expected one trace in the log");
  } catch (const std::exception& e) {
    v.require(false, e.what());
  }
  stop.request_stop();
  server.join();
  std::size_t lines = 0;
  for (char c : out.str()) lines += c == '\n';
  v.require(lines == 1, "expected one flushed trace, got " + std::to_string(lines));
  v.require(out.str().ends_with(" 5 async\n"), "report: " + out.str());
  return v;
}

Verdict case_study() {
  Verdict v;
  // Expected cross-service calls, counted from the fixture itself.
  auto fixture = nlohmann::json::parse(slurp(data_path("two_service.json")));
  std::map<std::string, std::string> service_of;
  std::vector<std::pair<std::string, std::string>> parent_links;
  for (const auto& rs : fixture["resourceSpans"]) {
    const std::string svc = rs["resource"]["attributes"][0]["value"]["stringValue"];
    for (const auto& ss : rs["scopeSpans"]) {
      for (const auto& s : ss["spans"]) {
        service_of[s["spanId"]] = svc;
        if (s.contains("parentSpanId")) parent_links.emplace_back(s["parentSpanId"], s["spanId"]);
      }
    }
  }
  std::size_t cross = 0;
  for (const auto& [parent, child] : parent_links) {
    cross += service_of[parent] == "product-service" && service_of[child] == "recommendation-service";
  }

  TempDir dir;
  std::string dots[2][2];
  for (int run = 0; run < 2; ++run) {
    const auto log = (dir / ("log" + std::to_string(run))).string();
    const auto deps = (dir / ("deps" + std::to_string(run) + ".dot")).string();
    const auto tree = (dir / ("tree" + std::to_string(run) + ".dot")).string();
    v.require(run_cli({"convert", "--input", data_path("two_service.json").string(), "--output", log})
                      .code == 0,
              "convert failed");
    auto r = run_cli({"analyze", "--input", log, "--deps", deps, "--calltree", tree});
    v.require(r.code == 0, "analyze failed: " + r.err);
    dots[run][0] = slurp(deps);
    dots[run][1] = slurp(tree);
    if (run == 0) {
      auto graph = build_dependency_graph(reconstruct_traces(kieker::read_monitoring_log(log).records,
                                                             ReconstructionMode::kSynchronous));
      const auto weight = graph.edge_weight("product-service", "recommendation-service");
      v.require(cross > 0 && weight == cross,
                "edge weight " + std::to_string(weight) + ", expected " + std::to_string(cross));
      const std::string edge = "\"product-service\" -> \"recommendation-service\" [label=\"" +
                               std::to_string(cross) + "\"]";
      v.require(dots[0][0].find(edge) != std::string::npos, "DOT lacks " + edge);
      if (v.pass) v.detail = "edge weight " + std::to_string(weight) + " = cross-service calls";
    }
  }
  v.require(dots[0][0] == dots[1][0] && dots[0][1] == dots[1][1], "DOT output differs across runs");
  return v;
}

struct Criterion {
  int number;
  const char* title;
  std::chrono::milliseconds limit;
  std::function<Verdict()> check;
};

}  // namespace

int main(int argc, char** argv) {
  using std::chrono::milliseconds;
  std::set<int> allowed;
  for (int i = 1; i < argc; ++i) {
    std::string_view arg = argv[i];
    if (!arg.starts_with("--allow-fail=")) {
      std::cerr << "usage: " << argv[0] << " [--allow-fail=N[,M...]]\n";
      return 1;
    }
    std::istringstream list{std::string(arg.substr(13))};
    for (std::string n; std::getline(list, n, ',');) allowed.insert(std::stoi(n));
  }
  const std::vector<Criterion> criteria = {
      {1, "fig3 conversion, synchronous rejection, asynchronous call tree", milliseconds(1000), fig3},
      {2, "asynchronous round trip on 200 random forests", milliseconds(10000), async_round_trip},
      {3, "synchronous round trip on 200 random forests", milliseconds(10000), sync_round_trip},
      {4, "field mapping property", milliseconds(0), field_mapping},
      {5, "monitoring log golden bytes and idempotence", milliseconds(0), monitoring_log_codec},
      {6, "JSON and binary OTLP parse identically", milliseconds(0), ingest_equivalence},
      {7, "receiver merges two POSTs into one trace", milliseconds(30000), receiver},
      {8, "two-service dependency graph and deterministic DOT", milliseconds(0), case_study},
  };
  int failed = 0, tolerated = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const auto took =
        std::chrono::duration_cast<milliseconds>(std::chrono::steady_clock::now() - start);
    if (c.limit.count() > 0 && took > c.limit) {
      v.pass = false;
      v.detail = "took " + std::to_string(took.count()) + " ms, limit " +
                 std::to_string(c.limit.count()) + " ms";
    }
    const bool tolerate = !v.pass && v.explained && allowed.contains(c.number);
    tolerated += tolerate;
    failed += !v.pass && !tolerate;
    std::cout << "criterion " << c.number << ": " << (v.pass ? "PASS" : "FAIL") << "  " << c.title
              << " (" << took.count() << " ms)";
    if (!v.detail.empty()) std::cout << "  -- " << v.detail;
    if (tolerate) std::cout << "  [allowed: every failure explained]";
    std::cout << std::endl;
  }
  std::cout << "summary: " << criteria.size() - failed - tolerated << " pass, " << tolerated
            << " explained fail, " << failed << " unexplained fail" << std::endl;
  return failed;
}
