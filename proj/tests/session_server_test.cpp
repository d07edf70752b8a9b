#include "qhunt/session_server.hpp"

#include <cstdlib>
#include <filesystem>
#include <future>

#include <gtest/gtest.h>

namespace qhunt {
namespace {

using namespace std::chrono_literals;

class ServerTest : public ::testing::Test {
protected:
    void SetUp() override {
        ServerConfig cfg;
        cfg.port = 0;
        cfg.step_interval = 0ms;
        server = std::make_unique<SessionServer>(cfg, SessionServer::Options{200ms});
        port = server->start();
        client = std::make_unique<httplib::Client>("127.0.0.1", port);
        client->set_read_timeout(5, 0);
    }

    std::pair<int, json> post(const std::string& path, const json& body) {
        auto res = client->Post(path, body.dump(), "application/json");
        if (!res) return {-1, nullptr};
        return {res->status, json::parse(res->body)};
    }

    std::pair<int, json> get(const std::string& path) {
        auto res = client->Get(path);
        if (!res) return {-1, nullptr};
        return {res->status, json::parse(res->body)};
    }

    std::string new_session(std::uint64_t seed = 1) {
        auto [code, body] = post("/session", {{"seed", seed}});
        EXPECT_EQ(code, 200);
        return body["id"];
    }

    std::unique_ptr<SessionServer> server;
    std::unique_ptr<httplib::Client> client;
    int port = 0;
};

} // namespace

TEST_F(ServerTest, CreateAndStatus) {
    const auto id = new_session();
    auto [code, status] = get("/session/" + id + "/status");
    EXPECT_EQ(code, 200);
    EXPECT_EQ(status["mode"], "Auto");
    EXPECT_EQ(status["phase"], "ObserveState");
    EXPECT_EQ(status["episode"], 0);
    EXPECT_EQ(status["running"], false);
}

TEST_F(ServerTest, UnknownSessionIs404) {
    auto [code, body] = get("/session/s999/status");
    EXPECT_EQ(code, 404);
    EXPECT_EQ(body["error"], "no session s999");
}

TEST_F(ServerTest, MalformedRequestsAre400) {
    const auto id = new_session();
    EXPECT_EQ(post("/session/" + id + "/control", {{"action", "jump"}}).first, 400);
    EXPECT_EQ(post("/session/" + id + "/mode", {{"mode", "Turbo"}}).first, 400);
    EXPECT_EQ(post("/session/" + id + "/reward", {{"reward", 1}, {"confirm", true}}).first, 400);
    EXPECT_EQ(post("/session/" + id + "/control", {{"action", "step"}, {"extra", 1}}).first, 400);
    EXPECT_EQ(get("/session/" + id + "/qtable?slice=2").first, 400);

    auto res = client->Post("/session/" + id + "/control", "{\"action\": ", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    EXPECT_TRUE(json::parse(res->body).contains("offset"));
}

TEST_F(ServerTest, InvalidConfigListsProblems) {
    json cfg = to_json(default_config());
    cfg["exit"] = json::array({0, 0});
    auto [code, body] = post("/session", {{"config", cfg}});
    EXPECT_EQ(code, 400);
    EXPECT_FALSE(body["problems"].empty());
}

TEST_F(ServerTest, RejectionIs409WithReason) {
    const auto id = new_session();
    auto [code, body] = post("/session/" + id + "/advice", {{"action", "Right"}});
    EXPECT_EQ(code, 409);
    EXPECT_EQ(body["accepted"], false);
    EXPECT_EQ(body["error"], "not awaiting advice");
    EXPECT_EQ(post("/session/" + id + "/epsilon", {{"epsilon", 2.0}}).first, 409);
}

TEST_F(ServerTest, ManualStepOverHttp) {
    const auto id = new_session(3);
    const std::string base = "/session/" + id;
    ASSERT_EQ(post(base + "/mode", {{"mode", "Manual"}}).first, 200);
    auto [c1, s1] = post(base + "/control", {{"action", "step"}});
    ASSERT_EQ(c1, 200);
    EXPECT_EQ(s1["status"]["awaiting"], "Advice");

    auto [c2, masked] = post(base + "/advice", {{"action", "Up"}});
    EXPECT_EQ(c2, 409);
    EXPECT_EQ(masked["error"], "action is masked here");
    ASSERT_EQ(post(base + "/advice", {{"action", "Down"}}).first, 200);
    auto [c3, s3] = post(base + "/control", {{"action", "step"}});
    EXPECT_EQ(s3["status"]["awaiting"], "Reward");

    ASSERT_EQ(post(base + "/reward", {{"reward", 12.5}}).first, 200);
    auto [c4, s4] = post(base + "/control", {{"action", "step"}});
    EXPECT_EQ(s4["status"]["last_reward"], 12.5);
    EXPECT_EQ(s4["status"]["cell"], json::array({1, 0}));

    const auto rec = server->find(id)->state().current_records;
    ASSERT_EQ(rec.size(), 1u);
    EXPECT_EQ(rec[0].reward_source, RewardSource::HumanOverride);
}

TEST_F(ServerTest, ReadPayloads) {
    const auto id = new_session(4);
    for (int i = 0; i < 30; ++i) post("/session/" + id + "/control", {{"action", "step"}});
    auto [qc, q] = get("/session/" + id + "/qtable?slice=0");
    EXPECT_EQ(qc, 200);
    EXPECT_EQ(q["cells"].size(), 9u);
    auto [vc, v] = get("/session/" + id + "/visits?slice=1");
    EXPECT_EQ(vc, 200);
    EXPECT_EQ(v["treasure_slice"], true);
    EXPECT_EQ(v["total"], 30);
    auto [tc, t] = get("/session/" + id + "/trajectory");
    EXPECT_EQ(tc, 200);
    EXPECT_TRUE(t.contains("available"));
}

TEST_F(ServerTest, SaveThenLoadRestoresState) {
    const auto id = new_session(5);
    for (int i = 0; i < 25; ++i) post("/session/" + id + "/control", {{"action", "step"}});
    const auto path = (std::filesystem::temp_directory_path() / "qhunt_server_save.json").string();
    ASSERT_EQ(post("/session/" + id + "/save", {{"path", path}}).first, 200);
    auto [code, body] = post("/session/load", {{"path", path}});
    ASSERT_EQ(code, 200);
    const std::string loaded = body["id"];
    EXPECT_NE(loaded, id);
    EXPECT_EQ(server->find(loaded)->state(), server->find(id)->state());
    EXPECT_EQ(post("/session/load", {{"path", "/nonexistent/qhunt.json"}}).first, 500);
}

TEST_F(ServerTest, EventStreamDeliversStepEvents) {
    const auto id = new_session(6);
    std::promise<std::string> first_step;
    auto reader = std::async(std::launch::async, [&] {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(5, 0);
        std::string buffer;
        bool fulfilled = false;
        c.Get("/session/" + id + "/events", [&](const char* data, std::size_t n) {
            buffer.append(data, n);
            if (!fulfilled && buffer.find("event: StepCompleted") != std::string::npos) {
                first_step.set_value(buffer);
                fulfilled = true;
                return false;
            }
            return true;
        });
        if (!fulfilled) first_step.set_value(buffer);
    });
    auto fut = first_step.get_future();
    for (int i = 0; i < 500 && fut.wait_for(10ms) != std::future_status::ready; ++i)
        post("/session/" + id + "/control", {{"action", "step"}});
    const std::string text = fut.get();
    reader.get();
    EXPECT_NE(text.find("event: StepCompleted"), std::string::npos);
    EXPECT_NE(text.find("id: "), std::string::npos);
    EXPECT_NE(text.find("data: {"), std::string::npos);
}

TEST(ServerConfigJson, ShippedFileParses) {
    const ServerConfig c = load_server_config(std::string(QHUNT_SOURCE_DIR) + "/configs/server.json");
    EXPECT_EQ(c.host, "127.0.0.1");
    EXPECT_EQ(c.port, 8080);
    EXPECT_FALSE(c.bridge_url);
    EXPECT_EQ(c.step_interval, 300ms);
    EXPECT_EQ(server_config_from_json(to_json(c)).port, 8080);
}

TEST(ServerConfigJson, RejectsBadInput) {
    EXPECT_THROW(server_config_from_json({{"schema_version", 1}, {"bind", "nohost"}}), ConfigError);
    EXPECT_THROW(server_config_from_json({{"schema_version", 1}, {"bind", "h:99999"}}), ConfigError);
    EXPECT_THROW(server_config_from_json({{"schema_version", 2}}), SchemaVersionError);
    EXPECT_THROW(server_config_from_json({{"schema_version", 1}, {"colour", 1}}), FormatError);
}

TEST(ServerConfigJson, EnvironmentOverrides) {
    ::setenv("QHUNT_BIND", "0.0.0.0:9001", 1);
    ::setenv("QHUNT_BRIDGE_URL", "http://robot:8081", 1);
    ::setenv("QHUNT_STEP_INTERVAL_MS", "40", 1);
    const ServerConfig c = apply_env_overrides(ServerConfig{});
    ::unsetenv("QHUNT_BIND");
    ::unsetenv("QHUNT_BRIDGE_URL");
    ::unsetenv("QHUNT_STEP_INTERVAL_MS");
    EXPECT_EQ(c.host, "0.0.0.0");
    EXPECT_EQ(c.port, 9001);
    EXPECT_EQ(c.bridge_url, "http://robot:8081");
    EXPECT_EQ(c.step_interval, 40ms);

    ::setenv("QHUNT_STEP_INTERVAL_MS", "fast", 1);
    EXPECT_THROW(apply_env_overrides(ServerConfig{}), ConfigError);
    ::unsetenv("QHUNT_STEP_INTERVAL_MS");
}

TEST(Sse, Framing) {
    const TrainingEvent e{12, EventKind::ModeChanged, {{"mode", "Manual"}}};
    EXPECT_EQ(format_sse(e),
              "id: 12\nevent: ModeChanged\ndata: {\"kind\":\"ModeChanged\",\"payload\":{\"mode\":\"Manual\"},\"seq\":12}\n\n");
}

} // namespace qhunt
