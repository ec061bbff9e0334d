#include "polygnn/errors.hpp"
#include "polygnn/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace polygnn;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "polygnn_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

ModelParams trained_like_params() {
    Architecture a;
    a.max_nodes = 6;
    a.gcn_channels = {4};
    a.encoder_hidden = {5};
    a.encoded_dim = 2;
    a.mlp_hidden = {3};
    ModelParams p = init_params(a, 11);
    p.dropout_rate = 0.2;
    p.l2_coefficient = 1e-4;
    p.norm.c_scale = (Voigt() << 0.3, 0.31, 0.29, 0.2, 0.21, 0.19).finished();
    p.norm.psi_scale = 0.0123456789012345;
    auto flat = flatten_parameters(p);
    flat.back() = 1.0 / 3.0;
    assign_parameters(p, flat);
    return p;
}

}  // namespace

TEST(Numbers, SeventeenDigitsRoundTrip) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng) * std::pow(10.0, i % 40 - 20);
        EXPECT_EQ(std::stod(format_double(x)), x);
    }
}

TEST(Checkpoint, RoundTripIsExact) {
    const ModelParams p = trained_like_params();
    const auto path = scratch("model.ckpt");
    save_checkpoint(p, path);
    const ModelParams q = load_checkpoint(path, &p.arch);
    EXPECT_EQ(q.arch, p.arch);
    EXPECT_EQ(flatten_parameters(q), flatten_parameters(p));
    EXPECT_EQ(q.dropout_rate, p.dropout_rate);
    EXPECT_EQ(q.l2_coefficient, p.l2_coefficient);
    EXPECT_EQ(q.norm.c_scale, p.norm.c_scale);
    EXPECT_EQ(q.norm.psi_scale, p.norm.psi_scale);
    EXPECT_EQ(serialize_checkpoint(q), serialize_checkpoint(p));
}

TEST(Checkpoint, TruncationIsDetected) {
    const std::string text = serialize_checkpoint(trained_like_params());
    EXPECT_THROW(parse_checkpoint(text.substr(0, text.size() / 2)), ChecksumError);
    EXPECT_THROW(parse_checkpoint(""), IoError);
}

TEST(Checkpoint, CorruptedValueFailsTheChecksum) {
    std::string text = serialize_checkpoint(trained_like_params());
    const auto pos = text.find("0.33333333333333331");
    ASSERT_NE(pos, std::string::npos);
    text[pos + 5] = '9';
    EXPECT_THROW(parse_checkpoint(text), ChecksumError);
}

TEST(Checkpoint, ArchitectureMismatchNamesThePropagationMode) {
    const ModelParams p = trained_like_params();
    Architecture other = p.arch;
    other.propagation = PropagationMode::paper_laplacian;
    try {
        parse_checkpoint(serialize_checkpoint(p), &other);
        FAIL() << "expected ArchitectureMismatch";
    } catch (const ArchitectureMismatch& e) {
        EXPECT_NE(std::string(e.what()).find("renormalized_adjacency"), std::string::npos);
    }
    other = p.arch;
    other.mlp_hidden = {4};
    EXPECT_THROW(parse_checkpoint(serialize_checkpoint(p), &other), ArchitectureMismatch);
}

TEST(Checkpoint, MissingFileIsAnIoError) {
    EXPECT_THROW(load_checkpoint(scratch("does_not_exist.ckpt")), IoError);
}

TEST(Polycrystal, BinaryRoundTrip) {
    auto p = generate_polycrystal(5, 7, {6, 5, 4});
    p.orientations = sample_orientations(5, 7, {});
    const auto path = scratch("rve.pxtl");
    save_polycrystal(path, p);
    const auto q = load_polycrystal(path);
    EXPECT_EQ(q.grid, p.grid);
    EXPECT_EQ(q.labels, p.labels);
    EXPECT_EQ(q.seed, p.seed);
    ASSERT_EQ(q.n_grains(), p.n_grains());
    for (std::size_t g = 0; g < p.n_grains(); ++g) {
        EXPECT_EQ(q.orientations[g].phi1, p.orientations[g].phi1);
        EXPECT_EQ(q.orientations[g].Phi, p.orientations[g].Phi);
        EXPECT_EQ(q.orientations[g].phi2, p.orientations[g].phi2);
    }
}

TEST(Polycrystal, DamagedFilesAreRejected) {
    auto p = generate_polycrystal(5, 3, {4, 4, 4});
    p.orientations = sample_orientations(5, 3, {});
    const auto path = scratch("bad.pxtl");
    save_polycrystal(path, p);
    std::string bytes = read_text_file(path);
    write_text_file(path, bytes.substr(0, bytes.size() - 3));
    EXPECT_THROW(load_polycrystal(path), IoError);
    write_text_file(path, "XXXX" + bytes.substr(4));
    EXPECT_THROW(load_polycrystal(path), IoError);
}

TEST(Graph, FileRoundTrip) {
    const std::vector<std::pair<std::size_t, std::size_t>> c = {{0, 1}, {1, 2}, {2, 3}, {2, 4}, {3, 4}};
    const Graph g = build_graph(5, c);
    const auto path = scratch("g.graph");
    write_graph_file(path, g);
    const Graph h = read_graph_file(path);
    EXPECT_EQ(h.n_nodes, g.n_nodes);
    EXPECT_EQ(h.edges, g.edges);
    write_text_file(path, "n 2\ne 0 0\n");
    EXPECT_THROW(read_graph_file(path), IoError);
}

TEST(Dataset, CsvRoundTripIsExact) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n;
    std::vector<DeformationSample> s(25);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i].rve_id = int(i / 10);
        for (int k = 0; k < 6; ++k) {
            s[i].C[k] += 0.01 * n(rng);
            s[i].S[k] = n(rng);
        }
        s[i].psi = std::abs(n(rng)) * 1e-3;
    }
    const auto path = scratch("dataset.csv");
    write_dataset_csv(path, s);
    const auto t = read_dataset_csv(path);
    ASSERT_EQ(t.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_EQ(t[i].rve_id, s[i].rve_id);
        EXPECT_EQ(t[i].C, s[i].C);
        EXPECT_EQ(t[i].psi, s[i].psi);
        EXPECT_EQ(t[i].S, s[i].S);
    }
    EXPECT_EQ(read_text_file(path).substr(0, std::string(kDatasetHeader).size()), kDatasetHeader);
}

TEST(Dataset, MalformedRowsAreRejected) {
    const auto path = scratch("broken.csv");
    write_text_file(path, std::string(kDatasetHeader) + "\n0,1,1,1\n");
    EXPECT_THROW(read_dataset_csv(path), IoError);
    write_text_file(path, "rve,C11\n");
    EXPECT_THROW(read_dataset_csv(path), IoError);
}

TEST(Metadata, SortedKeyValueLines) {
    const auto path = scratch("meta.txt");
    write_metadata(path, {{"seed", "4"}, {"config_hash", "abc"}});
    EXPECT_EQ(read_text_file(path), "config_hash abc\nseed 4\n");
    EXPECT_EQ(read_metadata(path).at("seed"), "4");
}

TEST(CsvWriter, WritesHeaderAndRows) {
    const auto path = scratch("w.csv");
    {
        CsvWriter w(path, {"a", "b", "c"});
        w << 1 << 0.5 << std::string("x");
        w.end_row();
        w << std::size_t(2) << 0.1 << std::string("y");
        w.end_row();
    }
    EXPECT_EQ(read_text_file(path), "a,b,c\n1,0.5,x\n2,0.10000000000000001,y\n");
}

TEST(Hash, Fnv1aKnownValue) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}
