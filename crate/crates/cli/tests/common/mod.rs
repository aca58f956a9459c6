#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use semauto_core::synthetic::{generate, WorldConfig};

pub fn semauto() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_semauto"));
    c.env("SEMAUTO_LOG", "info").env_remove("SEMAUTO_MANIFEST");
    c
}

pub fn run(manifest: &Path, args: &[&str]) -> Output {
    semauto().arg("-m").arg(manifest).args(args).output().expect("spawning semauto")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn ok(o: Output) -> Output {
    assert!(o.status.success(), "semauto failed\nstdout:\n{}\nstderr:\n{}", stdout(&o), stderr(&o));
    o
}

/// Two movies, three features, four edges, one rating each from two users.
pub fn toy(dir: &Path) -> PathBuf {
    std::fs::write(
        dir.join("triples.nt"),
        "<http://dbpedia.org/resource/A> <http://purl.org/dc/terms/subject> <http://dbpedia.org/resource/Category:Robot_films> .\n\
         <http://dbpedia.org/resource/A> <http://dbpedia.org/ontology/director> <http://dbpedia.org/resource/Jane_Doe> .\n\
         <http://dbpedia.org/resource/B> <http://purl.org/dc/terms/subject> <http://dbpedia.org/resource/Category:Robot_films> .\n\
         <http://dbpedia.org/resource/B> <http://purl.org/dc/terms/subject> <http://dbpedia.org/resource/Category:IMAX_films> .\n\
         <http://dbpedia.org/resource/B> <http://www.w3.org/2000/01/rdf-schema#label> \"B\"@en .\n",
    )
    .unwrap();
    std::fs::write(dir.join("mapping.tsv"), "itemId\tentity\ttitle\n1\tdbr:A\tA (1990)\n2\tdbr:B\tB (2001)\n").unwrap();
    std::fs::write(
        dir.join("ratings.csv"),
        "userId,movieId,rating,timestamp\n1,1,5.0,1\n2,2,2.0,2\n3,99,4.0,3\n",
    )
    .unwrap();
    manifest(dir, "")
}

/// Writes `semauto.toml` pointing at the inputs in `dir`, plus `extra`.
pub fn manifest(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("semauto.toml");
    std::fs::write(
        &path,
        format!(
            "output_dir = \"out\"\n{extra}\n[paths]\ntriples = \"triples.nt\"\nratings = \"ratings.csv\"\nmapping = \"mapping.tsv\"\n"
        ),
    )
    .unwrap();
    path
}

/// The default synthetic world (120 movies, 40 users) in `dir`.
pub fn world(dir: &Path) {
    generate(&WorldConfig::default()).unwrap().write_to(dir).unwrap();
}

/// Every file under `dir` with its bytes, sorted by path.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// A `semauto serve` child process bound to an ephemeral port.
pub struct Server {
    child: std::process::Child,
    pub addr: String,
    agent: ureq::Agent,
}

impl Server {
    pub fn start(manifest: &Path) -> Server {
        use std::io::BufRead;
        let mut child = semauto()
            .arg("-m")
            .arg(manifest)
            .args(["serve", "--bind", "127.0.0.1:0"])
            .stdout(std::process::Stdio::piped())
            .stderr(std::process::Stdio::null())
            .spawn()
            .expect("spawning semauto serve");
        let mut line = String::new();
        std::io::BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let addr = line.trim().strip_prefix("listening on ").unwrap_or_else(|| panic!("unexpected: {line:?}")).to_string();
        let agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        Server { child, addr, agent }
    }

    fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    pub fn get(&self, path: &str) -> (u16, serde_json::Value) {
        let mut r = self.agent.get(&self.url(path)).call().unwrap();
        (r.status().as_u16(), r.body_mut().read_json().unwrap())
    }

    pub fn post(&self, path: &str, body: serde_json::Value) -> (u16, serde_json::Value) {
        let mut r = self.agent.post(&self.url(path)).send_json(&body).unwrap();
        (r.status().as_u16(), r.body_mut().read_json().unwrap())
    }

    /// Polls the recommendations endpoint until training is done.
    pub fn wait_for_recommendations(&self, id: u64) -> serde_json::Value {
        let deadline = std::time::Instant::now() + std::time::Duration::from_secs(120);
        loop {
            let (status, body) = self.get(&format!("/sessions/{id}/recommendations"));
            match status {
                200 => return body,
                202 => assert_eq!(body["status"], "training"),
                other => panic!("recommendations: {other} {body}"),
            }
            assert!(std::time::Instant::now() < deadline, "training did not finish");
            std::thread::sleep(std::time::Duration::from_millis(50));
        }
    }

    /// Sends SIGINT and waits for a clean exit.
    pub fn interrupt(mut self) -> std::process::ExitStatus {
        let pid = self.child.id().to_string();
        let sent = Command::new("kill").args(["-INT", &pid]).status().unwrap();
        assert!(sent.success());
        self.child.wait().unwrap()
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
