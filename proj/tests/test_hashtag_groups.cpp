#include <doctest.h>

#include <random>

#include "convo/hashtag_groups.hpp"
#include "test_util.hpp"

using namespace convo;
using namespace convo::testing;

namespace {

Corpus tag_corpus(const std::vector<std::string>& tag_lists) {
  std::vector<Rec> recs;
  int i = 0;
  for (const auto& tags : tag_lists) {
    recs.push_back({"m" + std::to_string(i), "u" + std::to_string(i % 3), "some words here " + tags, std::nullopt, i});
    ++i;
  }
  return ingest(recs);
}

HashtagGroup group(int id, std::vector<std::string> members) {
  HashtagGroup g;
  g.group_id = id;
  g.members = std::move(members);
  g.scores.assign(g.members.size(), 1);
  return g;
}

}  // namespace

TEST_SUITE("hashtag_groups") {
  TEST_CASE("vocabulary cap and ordering") {
    const Corpus c = tag_corpus({"#a", "#a #b", "#a"});
    const HashtagVocab v = build_vocab(c, 1);
    REQUIRE(v.size() == 1);
    CHECK(v.entries[0].hashtag == "a");
    CHECK(v.entries[0].frequency == 3);
    CHECK(build_vocab(c, 100).size() == 2);
  }

  TEST_CASE("tie at the cutoff keeps the smaller hashtag") {
    const Corpus c = tag_corpus({"#zeta", "#alpha", "#mid #mid2"});
    const HashtagVocab v = build_vocab(c, 1);
    REQUIRE(v.size() == 1);
    CHECK(v.entries[0].hashtag == "alpha");
  }

  TEST_CASE("co-occurrence counts") {
    const Corpus one = tag_corpus({"#a #b"});
    const auto vo = build_vocab(one, 10);
    const auto co = cooccurrence(one, vo);
    const auto a = static_cast<Eigen::Index>(*vo.index_of("a"));
    const auto b = static_cast<Eigen::Index>(*vo.index_of("b"));
    CHECK(co.at(a, b) == 1);
    CHECK(co.at(a, a) == 1);

    const Corpus c = tag_corpus({"#a #b", "#a #b", "#a #c"});
    const auto v = build_vocab(c, 10);
    const auto m = cooccurrence(c, v);
    const auto ia = static_cast<Eigen::Index>(*v.index_of("a"));
    const auto ib = static_cast<Eigen::Index>(*v.index_of("b"));
    const auto ic = static_cast<Eigen::Index>(*v.index_of("c"));
    CHECK(m.at(ia, ib) == 2);
    CHECK(m.at(ia, ic) == 1);
    CHECK(m.at(ia, ia) == 3);
  }

  TEST_CASE("co-occurrence is symmetric on random corpora") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::string> lists;
      for (int m = 0; m < 30; ++m) {
        std::string tags;
        for (int t = 0; t < 1 + static_cast<int>(rng() % 4); ++t) tags += " #t" + std::to_string(rng() % 8);
        lists.push_back(tags);
      }
      const Corpus c = tag_corpus(lists);
      const auto v = build_vocab(c, 100);
      const auto co = cooccurrence(c, v);
      for (Eigen::Index i = 0; i < co.dim(); ++i) {
        for (Eigen::Index j = 0; j < co.dim(); ++j) REQUIRE(co.at(i, j) == co.at(j, i));
      }
    }
  }

  TEST_CASE("cosine distance oracles") {
    Eigen::Vector3d x(1, 1, 0), y(1, 0, 1), z(0, 0, 1);
    CHECK(cosine_distance(x, x) == doctest::Approx(0.0));
    CHECK(cosine_distance(x, y) == doctest::Approx(0.5));
    CHECK(cosine_distance(Eigen::Vector3d(1, 0, 0), z) == doctest::Approx(1.0));
    CHECK(cosine_distance(Eigen::Vector3d::Zero(), z) == 1.0);
  }

  TEST_CASE("distance matrix has a zero diagonal and shared neighbourhoods at zero") {
    // a and b never co-occur but both co-occur only with c: identical rows once the diagonal is zeroed.
    const Corpus c = tag_corpus({"#a #c", "#b #c", "#a #c"});
    const auto v = build_vocab(c, 10);
    const Eigen::MatrixXd d = distance_matrix(cooccurrence(c, v));
    const auto ia = static_cast<Eigen::Index>(*v.index_of("a"));
    const auto ib = static_cast<Eigen::Index>(*v.index_of("b"));
    const auto ic = static_cast<Eigen::Index>(*v.index_of("c"));
    CHECK(d(ia, ia) == 0.0);
    CHECK(d(ia, ib) == doctest::Approx(0.0));
    CHECK(d(ia, ic) == doctest::Approx(1.0));
  }

  TEST_CASE("two gaussian blobs give exactly two clusters") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 0.1);
    Eigen::MatrixXd pts(100, 2);
    std::vector<int> truth;
    for (int i = 0; i < 100; ++i) {
      const double cx = i < 50 ? 0.0 : 10.0;
      pts(i, 0) = cx + noise(rng);
      pts(i, 1) = noise(rng);
      truth.push_back(i < 50 ? 0 : 1);
    }
    const auto r = density::hdbscan(pts, {5, 0, false});
    CHECK(r.num_clusters == 2);
    CHECK(r.noise_count() == 0);
    CHECK(adjusted_rand_index(r.labels, truth) == doctest::Approx(1.0));
  }

  TEST_CASE("uniform cube with a large min cluster size does not crash") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd pts(50, 3);
    for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = u(rng);
    const auto r = density::hdbscan(pts, {25, 0, false});
    CHECK(r.labels.size() == 50);
  }

  TEST_CASE("reduction keeps separated clusters separated and is seeded") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> noise(0.0, 0.05);
    Eigen::MatrixXd pts(60, 10);
    for (Eigen::Index i = 0; i < 60; ++i) {
      for (Eigen::Index d = 0; d < 10; ++d) pts(i, d) = (d == i / 20 ? 20.0 : 0.0) + noise(rng);
    }
    const Eigen::MatrixXd dist = density::pairwise_euclidean(pts);
    embed::UmapParams p;
    p.target_dim = 2;
    p.seed = 9;
    const Eigen::MatrixXd y = embed::reduce_dims(dist, p);
    const Eigen::MatrixXd y2 = embed::reduce_dims(dist, p);
    CHECK((y - y2).cwiseAbs().maxCoeff() == 0.0);
    double max_intra = 0.0;
    for (int i = 0; i < 60; ++i) {
      for (int j = i + 1; j < 60; ++j) {
        if (i / 20 == j / 20) max_intra = std::max(max_intra, (y.row(i) - y.row(j)).norm());
      }
    }
    Eigen::MatrixXd centroid = Eigen::MatrixXd::Zero(3, 2);
    for (int i = 0; i < 60; ++i) centroid.row(i / 20) += y.row(i) / 20.0;
    for (int a = 0; a < 3; ++a) {
      for (int b = a + 1; b < 3; ++b) CHECK((centroid.row(a) - centroid.row(b)).norm() > max_intra);
    }
  }

  TEST_CASE("single point reduces to the origin") {
    const Eigen::MatrixXd y = embed::reduce_dims(Eigen::MatrixXd::Zero(1, 1), embed::UmapParams{});
    CHECK(y.rows() == 1);
    CHECK(y.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("convo selection by term") {
    const std::vector<HashtagGroup> groups = {group(0, {"frexit", "ue", "asselineau"}),
                                              group(1, {"covid19", "covid", "covid_19"}),
                                              group(2, {"macron", "zemmour"})};
    const Corpus c = ingest({{"m1", "a", "sortir de l'ue #frexit #ue", std::nullopt, 1},
                             {"m2", "b", "le virus circule encore #covid_19", std::nullopt, 2},
                             {"m3", "c", "le debat ce soir #macron", std::nullopt, 3},
                             {"r1", "c", "RT", std::string("m1"), 4}});
    const ConvoSearch fx = find_convos(c, groups, {"#Frexit"});
    REQUIRE(fx.convos.size() == 1);
    CHECK(fx.convos[0].source_group.members == std::vector<std::string>{"frexit", "ue", "asselineau"});
    CHECK(fx.convos[0].message_ids == std::vector<std::string>{"m1"});
    CHECK(fx.convos[0].total_tweets == 1);
    CHECK(fx.convos[0].total_retweets == 1);

    const ConvoSearch cv = find_convos(c, groups, {"covid_19"});
    REQUIRE(cv.convos.size() == 1);
    CHECK(cv.convos[0].source_group.contains("covid19"));

    const ConvoSearch none = find_convos(c, groups, {"brexit"});
    CHECK(none.convos.empty());
    CHECK_FALSE(none.diagnostic.empty());
  }

  TEST_CASE("groups json round trip and table") {
    const HashtagGroup g = group(4, {"a", "b"});
    const HashtagGroup back = group_from_json(to_json(g));
    CHECK(back.members == g.members);
    CHECK(back.group_id == 4);
    CHECK(groups_table({g}).find("4\tb") != std::string::npos);
  }

  TEST_CASE("end to end on a small planted vocabulary") {
    std::vector<std::string> lists;
    for (int i = 0; i < 60; ++i) {
      const int c = i % 3;
      lists.push_back("#g" + std::to_string(c) + "a #g" + std::to_string(c) + "b" + (i % 2 ? " #g" + std::to_string(c) + "c" : ""));
    }
    GroupingParams p;
    p.min_cluster_size = 2;
    const GroupingResult r = build_hashtag_groups(tag_corpus(lists), p);
    CHECK(r.groups.size() == 3);
    CHECK_FALSE(r.reduced);
    for (const auto& g : r.groups) {
      for (const auto& m : g.members) CHECK(m.substr(0, 2) == g.exemplar().substr(0, 2));
    }
  }
}
