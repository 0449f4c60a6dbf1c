#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI through the shell; stdout is captured, stderr goes to err_file.
Result cli(const std::string& args, const fs::path& err_file = "/dev/null", const std::string& env = "") {
  const std::string cmd = env + std::string(BBJ_CLI_PATH) + " " + args + " 2>" + err_file.string();
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string sample(const std::string& name) { return (fs::path(BBJ_SAMPLES_DIR) / name).string(); }

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("bbj_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("run samples") {
  auto hello = cli("run " + sample("hello.asm"));
  CHECK(hello.code == 0);
  CHECK(hello.out == "Hello, World!\n");

  auto fact = cli("run " + sample("factorial.asm"));
  CHECK(fact.code == 0);
  CHECK(fact.out == slurp(sample("factorial.expected")));
}

TEST_CASE("asm then run matches run on source") {
  TempDir t;
  const auto obj = t.path / "hello.o";
  auto a = cli("asm " + sample("hello.asm") + " -o " + obj.string() + " --symbols");
  REQUIRE(a.code == 0);
  CHECK(fs::exists(obj.string() + ".sym"));
  CHECK(slurp(obj).rfind("bbj1 32\n", 0) == 0);
  auto r = cli("run " + obj.string());
  CHECK(r.code == 0);
  CHECK(r.out == cli("run " + sample("hello.asm")).out);

  // Format is detected by header, not by extension.
  const auto renamed = t.path / "hello.asm";
  fs::copy_file(obj, renamed);
  CHECK(cli("run " + renamed.string()).out == "Hello, World!\n");
}

TEST_CASE("exit codes") {
  TempDir t;
  CHECK(cli("run " + sample("factorial.asm") + " --max-steps 10").code == 2);

  std::ofstream(t.path / "grow.asm") << "0 4000 -1\n";
  CHECK(cli("run --word-size 16 --max-mem-bits 256 " + (t.path / "grow.asm").string()).code == 3);

  std::ofstream(t.path / "read.asm") << "-1 100 -1\n";
  CHECK(cli("run --word-size 16 " + (t.path / "read.asm").string() + " </dev/null").code == 4);
  CHECK(cli("run --word-size 16 --eof-zero " + (t.path / "read.asm").string() + " </dev/null").code == 0);

  std::ofstream(t.path / "dup.asm") << "A:0\nA:1\n";
  const auto err = t.path / "err.txt";
  CHECK(cli("asm " + (t.path / "dup.asm").string(), err).code == 1);
  const std::string msg = slurp(err);
  CHECK(msg.find("duplicate label 'A'") != std::string::npos);
  CHECK(msg.find("dup.asm:1") != std::string::npos);
  CHECK(msg.find("dup.asm:2") != std::string::npos);

  std::ofstream(t.path / "inc.asm") << ".include missing.asm\n";
  CHECK(cli("asm -I /nonexistent " + (t.path / "inc.asm").string(), err).code == 1);
  CHECK(slurp(err).find("/nonexistent") != std::string::npos);

  CHECK(cli("genlib --word-size 12").code == 1);
  CHECK(cli("frobnicate").code == 1);
  CHECK(cli("run /nonexistent/file.asm").code == 1);
}

TEST_CASE("include path from the environment") {
  TempDir t;
  fs::create_directories(t.path / "env");
  std::ofstream(t.path / "env" / "data.asm") << "D:7\n";
  std::ofstream(t.path / "main.asm") << "0 0 -1\n.include data.asm\n";
  const std::string main = (t.path / "main.asm").string();
  CHECK(cli("asm " + main).code == 1);
  auto r = cli("asm " + main, "/dev/null", "BBJ_INCLUDE=" + (t.path / "env").string() + " ");
  CHECK(r.code == 0);
  CHECK(r.out == "bbj1 32\n0 0 4294967295\n7\n");
}

TEST_CASE("in/out files") {
  TempDir t;
  std::ofstream(t.path / "in.bin", std::ios::binary) << '\xA5';
  auto r = cli("run " + sample("echo.asm") + " --in " + (t.path / "in.bin").string() + " --out " +
               (t.path / "out.bin").string());
  CHECK(r.code == 0);
  CHECK(r.out.empty());
  CHECK(slurp(t.path / "out.bin") == "\xA5");
}

TEST_CASE("trace and stats go to stderr") {
  TempDir t;
  const auto err = t.path / "err.txt";
  auto r = cli("run --trace " + sample("hi.asm"), err);
  CHECK(r.out == "Hi");
  std::istringstream lines(slurp(err));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    std::istringstream f(line);
    unsigned long long v;
    int fields = 0;
    while (f >> v) ++fields;
    CHECK(fields == 6);
    ++n;
  }
  CHECK(n == 18);

  auto s = cli("run --stats " + sample("hi.asm"), err);
  CHECK(s.out == "Hi");
  const std::string stats = slurp(err);
  CHECK(stats.find("steps 18") != std::string::npos);
  CHECK(stats.find("status halted") != std::string::npos);
}

TEST_CASE("expand and genlib") {
  TempDir t;
  std::ofstream(t.path / "plain.asm") << "A:1   B:2\n0  0 A\n";
  CHECK(cli("expand " + (t.path / "plain.asm").string()).out == "A:1 B:2 ?\n0 0 A\n");

  auto lib = cli("genlib --word-size 8");
  CHECK(lib.code == 0);
  CHECK(lib.out.find(".def copy X Y\nX'0 Y'0\nX'1 Y'1\n") != std::string::npos);
  CHECK(lib.out.find("X'w Y'w\n.end") != std::string::npos);
}

TEST_CASE("selftest") {
  auto r = cli("selftest --macro add --word-size 16 --cases 5 --seed 3");
  CHECK(r.code == 0);
  CHECK(r.out.rfind("add 16 ", 0) == 0);
  CHECK(r.out.substr(r.out.size() - 3) == " 0\n");
  CHECK(cli("selftest --macro nosuch").code == 1);
}

}
