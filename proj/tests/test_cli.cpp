#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_root() {
    static const fs::path root = [] {
        fs::path p = fs::temp_directory_path() /
                     ("kgq_cli_" + std::to_string(::getpid()));
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

fs::path scratch(const std::string& name) {
    fs::path p = scratch_root() / name;
    fs::create_directories(p);
    return p;
}

RunResult run(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "last_stdout.txt";
    const fs::path err = dir / "last_stderr.txt";
    const std::string cmd = std::string(KGQ_BIN) + " " + args + " >" +
                            out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    if (WIFEXITED(status)) r.code = WEXITSTATUS(status);
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

// A dataset and training setup small enough that every CLI round trip in
// this file finishes in well under a second.
const char* kTinyConfig =
    "[dataset]\n"
    "synth_entities = 40\n"
    "synth_relations = 4\n"
    "synth_triples = 200\n"
    "synth_seed = 11\n"
    "synth_skew = 1.0\n"
    "\n"
    "[quantize]\n"
    "variant = designed\n"
    "anchors = 8\n"
    "anchors_per_entity = 3\n"
    "\n"
    "[model]\n"
    "dim = 4\n"
    "hidden = 8\n"
    "\n"
    "[train]\n"
    "learning_rate = 0.005\n"
    "batch_size = 32\n"
    "epochs = 3\n"
    "negatives = 2\n"
    "loss = bce\n"
    "seed = 0\n";

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("usage errors exit with status 2") {
    const fs::path dir = scratch("usage");
    CHECK(run("", dir).code == 2);
    CHECK(run("frobnicate", dir).code == 2);
    CHECK(run("--help", dir).code == 0);
    CHECK(run("train --codes missing.txt", dir).code == 2);  // --out, --config
    CHECK(run("--backend warp quantize", dir).code == 2);
}

TEST_CASE("missing files are named in the error message") {
    const fs::path dir = scratch("missing");
    const RunResult r =
        run("quantize --config " + (dir / "absent.ini").string() + " --out " +
                (dir / "codes.txt").string(),
            dir);
    CHECK(r.code == 2);
    CHECK(contains(r.err, "absent.ini"));

    write_file(dir / "cfg.ini", kTinyConfig);
    const RunResult r2 =
        run("eval --checkpoint " + (dir / "no_ckpt.bin").string() +
                " --codes " + (dir / "no_codes.txt").string() + " --config " +
                (dir / "cfg.ini").string(),
            dir);
    CHECK(r2.code == 2);
    CHECK(contains(r2.err, "no_codes.txt"));
}

TEST_CASE("synth writes the split files and prints the manifest") {
    const fs::path dir = scratch("synth");
    write_file(dir / "cfg.ini", kTinyConfig);
    const fs::path out = dir / "data";
    const RunResult r = run(
        "synth --config " + (dir / "cfg.ini").string() + " --out " +
            out.string(),
        dir);
    CHECK(r.code == 0);
    CHECK(contains(r.out, "entities"));
    for (const char* name :
         {"train.tsv", "valid.tsv", "test.tsv", "manifest.txt",
          "effective.ini"})
        CHECK(fs::exists(out / name));

    std::size_t lines = 0;
    for (const char* name : {"train.tsv", "valid.tsv", "test.tsv"}) {
        std::ifstream in(out / name);
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) ++lines;
    }
    CHECK(lines == 200);

    // Without a dataset section there is nothing to generate.
    CHECK(run("synth --out " + (dir / "empty").string(), dir).code == 2);
}

TEST_CASE("quantize is byte-for-byte deterministic") {
    const fs::path dir = scratch("quantize");
    write_file(dir / "cfg.ini", kTinyConfig);
    const std::string base = "quantize --config " + (dir / "cfg.ini").string();
    const RunResult a =
        run(base + " --out " + (dir / "a.txt").string(), dir);
    CHECK(a.code == 0);
    CHECK(contains(a.out, "codes to"));
    CHECK(contains(a.out, "l="));
    CHECK(contains(a.out, "mean_rel_matches="));
    const RunResult b =
        run(base + " --out " + (dir / "b.txt").string(), dir);
    CHECK(b.code == 0);
    CHECK(slurp(dir / "a.txt") == slurp(dir / "b.txt"));
    CHECK(contains(slurp(dir / "a.txt"), "kgq-codes v1"));
}

TEST_CASE("analyze reports entropy and writes the analysis CSV") {
    const fs::path dir = scratch("analyze");
    write_file(dir / "cfg.ini", kTinyConfig);
    REQUIRE(run("quantize --config " + (dir / "cfg.ini").string() +
                    " --out " + (dir / "codes.txt").string(),
                dir)
                .code == 0);

    const RunResult r = run(
        "analyze --codes " + (dir / "codes.txt").string() +
            " --mode entropy --out " + (dir / "analysis.csv").string(),
        dir);
    CHECK(r.code == 0);
    CHECK(contains(r.out, "entropy_bits="));
    const std::string csv = slurp(dir / "analysis.csv");
    CHECK(contains(csv, "# kgq-analysis v1"));
    CHECK(contains(csv, "key,value,seed"));
    CHECK(contains(csv, "entropy,"));

    const RunResult u = run(
        "analyze --codes " + (dir / "codes.txt").string() +
            " --mode uniqueness --trials 200 --seed 5",
        dir);
    CHECK(u.code == 0);
    CHECK(contains(u.out, "p_unique="));

    const RunResult j = run(
        "analyze --codes " + (dir / "codes.txt").string() +
            " --mode jaccard-knn --k 1 --k 5",
        dir);
    CHECK(j.code == 0);

    const RunResult d = run(
        "analyze --codes " + (dir / "codes.txt").string() +
            " --mode degrade-sweep --steps 4 --seed 2",
        dir);
    CHECK(d.code == 0);

    CHECK(run("analyze --codes " + (dir / "codes.txt").string() +
                  " --mode nonsense",
              dir)
              .code == 2);
}

TEST_CASE("train produces checkpoints and a results row, eval reloads them") {
    const fs::path dir = scratch("train");
    write_file(dir / "cfg.ini", kTinyConfig);
    const std::string cfg = (dir / "cfg.ini").string();
    const std::string codes = (dir / "codes.txt").string();
    REQUIRE(run("quantize --config " + cfg + " --out " + codes, dir).code == 0);

    const fs::path out = dir / "run";
    const RunResult t = run(
        "train --config " + cfg + " --codes " + codes + " --out " +
            out.string(),
        dir);
    CHECK(t.code == 0);
    CHECK(contains(t.out, "seed=0"));
    CHECK(contains(t.out, "test_mrr="));
    for (const char* name :
         {"ckpt_seed0.bin", "ckpt_seed0.bin.opt", "ckpt_seed0_best.bin",
          "train_seed0.log", "results.csv"})
        CHECK(fs::exists(out / name));

    const std::string csv = slurp(out / "results.csv");
    CHECK(contains(csv, "# kgq-results v1"));
    CHECK(contains(csv, "dataset,strategy,seed,mrr,hits10,params,effi"));
    CHECK(contains(csv, "synth11,designed,0,"));

    const RunResult e = run(
        "eval --config " + cfg + " --checkpoint " +
            (out / "ckpt_seed0_best.bin").string() + " --codes " + codes +
            " --split test",
        dir);
    CHECK(e.code == 0);
    CHECK(contains(e.out, "mrr="));
    CHECK(contains(e.out, "effi="));

    CHECK(run("eval --config " + cfg + " --checkpoint " +
                  (out / "ckpt_seed0.bin").string() + " --codes " + codes +
                  " --split nope",
              dir)
              .code == 2);
}

TEST_CASE("resume refuses a checkpoint from a different configuration") {
    const fs::path dir = scratch("resume");
    write_file(dir / "cfg.ini", kTinyConfig);
    const std::string cfg = (dir / "cfg.ini").string();
    const std::string codes = (dir / "codes.txt").string();
    REQUIRE(run("quantize --config " + cfg + " --out " + codes, dir).code == 0);
    const fs::path out = dir / "run";
    REQUIRE(run("train --config " + cfg + " --codes " + codes + " --out " +
                    out.string(),
                dir)
                .code == 0);

    const RunResult r = run(
        "train --config " + cfg + " --set model.hidden=16 --codes " + codes +
            " --out " + (dir / "run2").string() + " --resume " +
            (out / "ckpt_seed0.bin").string(),
        dir);
    CHECK(r.code == 2);
    CHECK(contains(r.err, "refusing to resume"));
}

TEST_CASE("invalid loss names are configuration errors") {
    const fs::path dir = scratch("badloss");
    write_file(dir / "cfg.ini", kTinyConfig);
    const std::string codes = (dir / "codes.txt").string();
    REQUIRE(run("quantize --config " + (dir / "cfg.ini").string() + " --out " +
                    codes,
                dir)
                .code == 0);
    const RunResult r = run(
        "train --config " + (dir / "cfg.ini").string() +
            " --set train.loss=hinge --codes " + codes + " --out " +
            (dir / "run").string(),
        dir);
    CHECK(r.code == 2);
    CHECK(contains(r.err, "train.loss"));
}

TEST_CASE("numerical blowups exit with status 3") {
    const fs::path dir = scratch("blowup");
    write_file(dir / "cfg.ini", kTinyConfig);
    const std::string codes = (dir / "codes.txt").string();
    REQUIRE(run("quantize --config " + (dir / "cfg.ini").string() + " --out " +
                    codes,
                dir)
                .code == 0);
    const RunResult r = run(
        "train --config " + (dir / "cfg.ini").string() +
            " --set train.learning_rate=1e200 --codes " + codes + " --out " +
            (dir / "run").string(),
        dir);
    CHECK(r.code == 3);
    CHECK(contains(r.err, "non-finite"));
}

TEST_CASE("forcing the scalar backend reproduces auto-dispatch results") {
    const fs::path dir = scratch("backend");
    write_file(dir / "cfg.ini", kTinyConfig);
    const std::string cfg = (dir / "cfg.ini").string();
    const RunResult a = run(
        "quantize --config " + cfg + " --out " + (dir / "auto.txt").string(),
        dir);
    const RunResult s = run(
        "--backend scalar quantize --config " + cfg + " --out " +
            (dir / "scalar.txt").string(),
        dir);
    CHECK(a.code == 0);
    CHECK(s.code == 0);
    CHECK(slurp(dir / "auto.txt") == slurp(dir / "scalar.txt"));
}

TEST_CASE("sweep fills the variant by seed matrix") {
    const fs::path dir = scratch("sweep");
    write_file(dir / "cfg.ini", kTinyConfig);
    const fs::path out = dir / "sweep_out";
    const RunResult r = run(
        "sweep --config " + (dir / "cfg.ini").string() +
            " --variants designed --variants rq --seeds 1 --seeds 2 --out " +
            out.string(),
        dir);
    CHECK(r.code == 0);
    CHECK(fs::exists(out / "results.csv"));
    CHECK(fs::exists(out / "summary.csv"));
    CHECK(fs::exists(out / "summary.md"));
    const std::string csv = slurp(out / "results.csv");
    CHECK(contains(csv, "designed,1,"));
    CHECK(contains(csv, "designed,2,"));
    CHECK(contains(csv, "rq,1,"));
    CHECK(contains(csv, "rq,2,"));
    for (const char* cell :
         {"designed_seed1", "designed_seed2", "rq_seed1", "rq_seed2"})
        CHECK(fs::exists(out / cell / "codes.txt"));
}
