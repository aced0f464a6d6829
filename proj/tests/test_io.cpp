#include "catch_amalgamated.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "eqd/io.hpp"
#include "json.hpp"

namespace io = eqd::io;

TEST_CASE("reading values", "[io]") {
  std::istringstream plain("1.5\n2\n\n-3e-2\n");
  CHECK(io::read_values(plain) == std::vector<double>{1.5, 2.0, -0.03});

  std::istringstream header("flow\n  10 \n20\n");
  CHECK(io::read_values(header) == std::vector<double>{10.0, 20.0});

  std::istringstream bad("x\n1\n2\noops\n");
  try {
    io::read_values(bad, "data.csv");
    FAIL("expected an error");
  } catch (const eqd::InputError& e) {
    CHECK(std::string(e.what()).find("data.csv:4") != std::string::npos);
  }

  std::istringstream empty("value\n\n");
  CHECK_THROWS_AS(io::read_values(empty), eqd::InputError);
  CHECK_THROWS_AS(io::read_values(std::string("/nonexistent/file.csv")), eqd::InputError);
}

TEST_CASE("number formatting round trips", "[io]") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 5.9763115748443980068})
    CHECK(std::stod(io::format_number(x)) == x);
  CHECK(io::format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(io::format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(io::format_value(std::int64_t{42}) == "42");
  CHECK(io::format_value(std::string("a,b")) == "\"a,b\"");
  CHECK(io::format_value(std::string("say \"hi\"")) == "\"say \"\"hi\"\"\"");
}

TEST_CASE("csv and json carry the same values", "[io]") {
  io::Report r;
  r.set("chosen", 1.0 / 7.0);
  r.set("n", std::int64_t{3});
  auto& t = r.table("rows", {"u", "d"});
  t.add({0.25, 1e-17});
  t.add({0.5, std::numeric_limits<double>::quiet_NaN()});

  std::ostringstream csv, js;
  io::write_report(csv, r, io::Format::csv);
  io::write_report(js, r, io::Format::json);
  CHECK(csv.str() ==
        "# summary\nkey,value\nchosen,0.14285714285714285\nn,3\n\n# rows\nu,d\n0.25,1.0000000000000001e-17\n0.5,nan\n");
  const auto j = nlohmann::json::parse(js.str());
  CHECK(j["chosen"].get<double>() == 1.0 / 7.0);
  CHECK(j["n"].get<int>() == 3);
  CHECK(j["rows"][0]["d"].get<double>() == 1e-17);
  CHECK(j["rows"][1]["d"].is_null());

  io::Report single;
  single.table("x", {"value"}).add({2.0});
  std::ostringstream s;
  io::write_csv(s, single);
  CHECK(s.str() == "value\n2\n");
  CHECK_THROWS(single.tables[0].add({1.0, 2.0}));
  CHECK_THROWS_AS(io::parse_format("xml"), eqd::InputError);
}
