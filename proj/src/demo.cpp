#include "selfsql/demo.hpp"

#include <sqlite3.h>

namespace selfsql {

namespace {

struct DemoCase {
    const char* question;
    const char* gold;
    const char* inference_reply;
    const char* example_question; // paraphrase reused across variants
    const char* example_sql;      // %d is replaced by a per-variant number
};

const DemoCase kCases[5] = {
    {"How many singers are there?", "SELECT count(*) FROM singer",
     "SELECT count(*) FROM singer", "How many vocalists are listed in total?",
     "SELECT count(*) FROM singer"},
    {"List the names of all singers ordered by age descending.",
     "SELECT name FROM singer ORDER BY age DESC",
     "SQL: SELECT name FROM singer ORDER BY age DESC",
     "Show every singer name from oldest to youngest.",
     "SELECT name FROM singer ORDER BY age DESC"},
    {"What are the names of singers older than 30?",
     "SELECT name FROM singer WHERE age > 30",
     "```sql\nSELECT name FROM singer WHERE age > 30;\n```",
     "Which singers are above a given age?", "SELECT name FROM singer WHERE age > %d"},
    {"How many concerts did each singer perform?",
     "SELECT T1.name, count(*) FROM singer AS T1 JOIN concert AS T2 ON T1.singer_id = "
     "T2.singer_id GROUP BY T1.singer_id",
     "SELECT T1.name , count(*) FROM singer AS T1 JOIN concert AS T2 ON T1.singer_id = "
     "T2.singer_id GROUP BY T1.singer_id",
     "Count the shows performed per artist.",
     "SELECT T1.name, count(*) FROM singer AS T1 JOIN concert AS T2 ON T1.singer_id = "
     "T2.singer_id GROUP BY T1.singer_id"},
    {"What is the average age of singers from France?",
     "SELECT avg(age) FROM singer WHERE country = 'France'",
     "SELECT avg(age) FROM singer WHERE country = 'France'",
     "Find the mean age of singers from a country.",
     "SELECT avg(age) FROM singer WHERE country = 'Korea'"},
};

std::string variant_sql(const DemoCase& demo_case, int variant) {
    std::string sql = demo_case.example_sql;
    auto pos = sql.find("%d");
    if (pos != std::string::npos) sql.replace(pos, 2, std::to_string(20 + variant));
    return sql;
}

// Ten example blocks in three rotating header styles so the tolerant parser
// is exercised end to end.
std::string generation_response(int case_no) {
    const DemoCase& demo_case = kCases[case_no];
    std::string out = "Here are ten examples.\n\n";
    for (int k = 1; k <= 10; ++k) {
        std::string tag =
            "c" + std::to_string(case_no + 1) + "v" + std::to_string(k) + ": ";
        std::string question = tag + demo_case.example_question;
        std::string sql = variant_sql(demo_case, k);
        switch (k % 3) {
            case 1:
                out += "## Similar Question: " + question + "\n";
                out += "## SQL query: " + sql + "\n";
                out += "## Reasoning Path: 1. Locate the relevant table. 2. Apply the "
                       "operation the question asks for.\n\n";
                break;
            case 2:
                out += "Example " + std::to_string(k) + ":\n";
                out += "## Similar Question: " + question + "\n";
                out += "## SQL query:\n```sql\n" + sql + ";\n```\n";
                out += "## Reasoning Path:\n1. Identify the columns required.\n2. Build the "
                       "query step by step.\n\n";
                break;
            default:
                out += std::to_string(k) + ". Similar Question: " + question + "\n";
                out += "SQL: " + sql + "\n";
                out += "Reasoning Path: 1. Read the schema. 2. Translate the condition into "
                       "SQL.\n\n";
                break;
        }
    }
    return out;
}

void exec_or_throw(sqlite3* db, const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown sqlite error";
        sqlite3_free(err);
        throw Error("demo db setup failed: " + msg);
    }
}

void write_demo_db(const std::filesystem::path& file) {
    std::filesystem::create_directories(file.parent_path());
    std::filesystem::remove(file);
    sqlite3* db = nullptr;
    if (sqlite3_open(file.string().c_str(), &db) != SQLITE_OK)
        throw Error("cannot create demo db at " + file.string());
    exec_or_throw(db,
                  "CREATE TABLE singer(singer_id INTEGER PRIMARY KEY, name TEXT, age INTEGER, "
                  "country TEXT);"
                  "CREATE TABLE concert(concert_id INTEGER PRIMARY KEY, singer_id INTEGER, "
                  "year INTEGER, FOREIGN KEY(singer_id) REFERENCES singer(singer_id));"
                  "INSERT INTO singer VALUES (1,'Joe',52,'France'),(2,'Ann',28,'Korea'),"
                  "(3,'Mia',41,'France'),(4,'Tom',33,'USA'),(5,'Zoe',19,'Korea');"
                  "INSERT INTO concert VALUES (1,1,2014),(2,1,2015),(3,2,2014),(4,3,2016),"
                  "(5,3,2017),(6,3,2018),(7,5,2014);");
    sqlite3_close(db);
}

} // namespace

void write_demo_dataset(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    json tables = json::array();
    tables.push_back(json{
        {"db_id", "demo_music"},
        {"table_names_original", {"singer", "concert"}},
        {"column_names_original",
         {{-1, "*"},
          {0, "singer_id"},
          {0, "name"},
          {0, "age"},
          {0, "country"},
          {1, "concert_id"},
          {1, "singer_id"},
          {1, "year"}}},
        {"column_types",
         {"text", "number", "text", "number", "text", "number", "number", "number"}},
        {"foreign_keys", {{6, 1}}},
        {"primary_keys", {1, 5}},
    });
    write_file_atomic(dir / "tables.json", tables.dump(2) + "\n");

    json dev = json::array();
    for (const auto& demo_case : kCases)
        dev.push_back(json{{"db_id", "demo_music"},
                           {"question", demo_case.question},
                           {"query", demo_case.gold}});
    write_file_atomic(dir / "dev.json", dev.dump(2) + "\n");

    write_demo_db(dir / "database" / "demo_music" / "demo_music.sqlite");

    json patterns = json::array();
    patterns.push_back(json{{"stage", "generation"},
                            {"contains", "identify the tables, columns, and foreign keys"},
                            {"response",
                             "Relevant tables: singer, concert. Key columns: name, age, "
                             "country, singer_id. Foreign key: concert.singer_id -> "
                             "singer.singer_id."}});
    for (int c = 0; c < 5; ++c) {
        patterns.push_back(json{{"stage", "inference"},
                                {"contains", std::string("##Question: ") + kCases[c].question},
                                {"response", kCases[c].inference_reply}});
        patterns.push_back(json{{"stage", "generation"},
                                {"contains", std::string("## Question: ") + kCases[c].question},
                                {"response", generation_response(c)}});
    }
    // Case 4 scores low across the board so the fallback path runs for real.
    patterns.push_back(json{{"stage", "scoring"},
                            {"contains", "c4v"},
                            {"response", "Semantic: 2\nStructural: 2\nReasoning: 2"}});
    patterns.push_back(json{{"stage", "scoring"},
                            {"contains", "c1v1:"},
                            {"response", "Semantic: 10\nStructural: 10\nReasoning: 10"}});
    patterns.push_back(
        json{{"stage", "scoring"}, {"contains", "c1v2:"}, {"response", "7, 9, 8"}});
    patterns.push_back(json{{"stage", "scoring"},
                            {"contains", "c1v3:"},
                            {"response", "Semantic: 6 Structural: 3 Reasoning: 2"}});
    json responses = {
        {"patterns", patterns},
        {"default", "Semantic: 9\nStructural: 8\nReasoning: 9"},
    };
    write_file_atomic(dir / "responses.json", responses.dump(2) + "\n");
}

RunConfig demo_run_config(const std::filesystem::path& dir) {
    RunConfig config;
    config.tables_file = dir / "tables.json";
    config.questions_file = dir / "dev.json";
    config.db_dir = dir / "database";
    config.backend = BackendKind::mock_scripted;
    config.scripted_file = dir / "responses.json";
    return config;
}

} // namespace selfsql
