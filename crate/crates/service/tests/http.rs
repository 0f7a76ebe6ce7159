use std::collections::HashMap;
use std::sync::Arc;

use als_core::engine::{train, Hyperparams, TrainOptions};
use als_core::ingest::{stratified_split, Dataset, Movie, Rating, RatingsTable};
use als_core::model_io::{ModelMeta, SavedModel};
use als_core::recommend::{recommend, FoldInRequest};
use als_service::catalog::{summarize, Catalog};
use als_service::{router, AppState, LoadedModel};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const TITLES: [&str; 6] = [
    "Lion King, The (1994)",
    "Toy Story (1995)",
    "Toy Story 2 (1999)",
    "Heat (1995)",
    "Dead Lions (2000)",
    "Fargo (1996)",
];

fn movie_id(i: u32) -> u32 {
    100 + 7 * i
}

fn table() -> RatingsTable {
    let mut records = Vec::new();
    for u in 0..60u32 {
        for i in 0..30u32 {
            // item i is rated by roughly (30 - i) / 30 of users
            if (u * 13 + i * 5) % 30 >= i {
                let stars = 0.5 * (1 + (u * 3 + i * 11 + (u * i) % 7) % 10) as f64;
                records.push(Rating { user: 1000 + u, item: movie_id(i), stars, timestamp: 0 });
            }
        }
    }
    RatingsTable::new(records).unwrap()
}

fn movies() -> Vec<Movie> {
    (0..30u32)
        .map(|i| Movie {
            id: movie_id(i),
            title: TITLES.get(i as usize).map_or_else(|| format!("Movie {i} (2001)"), |t| t.to_string()),
            genres: vec!["Drama".into(), "Comedy".into()],
        })
        .collect()
}

fn fixture() -> (LoadedModel, Catalog) {
    let split = stratified_split(&table(), 0.8, 1).unwrap();
    let data = Dataset::from_split(&split.train, &split.test).unwrap();
    let h = Hyperparams::new(4, 0.1, 0.25, 6, 3).unwrap();
    let (params, _) = train(&data, &h, TrainOptions::default()).unwrap();
    let model = SavedModel {
        params,
        meta: ModelMeta {
            hyperparams: h,
            user_raw_ids: data.index.user_raw_ids().to_vec(),
            item_raw_ids: data.index.item_raw_ids().to_vec(),
            item_counts: data.item_counts(),
        },
    };
    let counts: HashMap<_, _> = summarize(&split.train).into_iter().collect();
    (LoadedModel::new(model).unwrap(), Catalog::new(movies(), &counts))
}

fn make_app(with_model: bool) -> axum::Router {
    let (model, catalog) = fixture();
    router(Arc::new(AppState {
        model: with_model.then_some(model),
        catalog,
    }))
}

async fn call(app: &axum::Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn get(app: &axum::Router, uri: &str) -> (StatusCode, Vec<u8>) {
    call(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn post(app: &axum::Router, body: &str) -> (StatusCode, Vec<u8>) {
    let req = Request::post("/api/recommend")
        .header("content-type", "application/json")
        .body(Body::from(body.to_owned()))
        .unwrap();
    call(app, req).await
}

fn parse(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

#[tokio::test]
async fn health_reports_model_state() {
    let loaded = make_app(true);
    let (status, body) = get(&loaded, "/api/health").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, br#"{"status":"ok","model_loaded":true}"#);
    assert_eq!(get(&loaded, "/api/health").await.1, body);
    let (_, body) = get(&make_app(false), "/api/health").await;
    assert_eq!(parse(&body)["model_loaded"], false);
}

#[tokio::test]
async fn movie_search_sorts_by_training_count() {
    let app = make_app(true);
    let split = stratified_split(&table(), 0.8, 1).unwrap();
    let mut counts: HashMap<u32, u64> = HashMap::new();
    for r in split.train.records() {
        *counts.entry(r.item).or_default() += 1;
    }
    let mut expected: Vec<(u64, &str, u32)> = movies()
        .iter()
        .filter(|m| m.title.to_lowercase().contains("toy story"))
        .map(|m| (counts[&m.id], TITLES.iter().find(|t| **t == m.title).copied().unwrap(), m.id))
        .collect();
    expected.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));

    let (status, body) = get(&app, "/api/movies?q=TOY%20story").await;
    assert_eq!(status, StatusCode::OK);
    let got: Vec<u64> = parse(&body).as_array().unwrap().iter().map(|e| e["movieId"].as_u64().unwrap()).collect();
    assert_eq!(got, expected.iter().map(|e| e.2 as u64).collect::<Vec<_>>());

    let (_, body) = get(&app, "/api/movies?q=lion&limit=1").await;
    let v = parse(&body);
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert_eq!(v[0]["title"], "Lion King, The (1994)");
    assert_eq!(v[0]["genres"], json!(["Drama", "Comedy"]));
    assert!(v[0]["rating_count"].as_u64().unwrap() > 0);

    let (status, body) = get(&app, "/api/movies?q=nothing-like-this").await;
    assert_eq!((status, body.as_slice()), (StatusCode::OK, b"[]".as_slice()));
    assert_eq!(get(&app, "/api/movies").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, "/api/movies?q=a&limit=0").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, "/api/movies?q=a&limit=x").await.0, StatusCode::BAD_REQUEST);
}

const THREE_FIVES: &str = r#"{"ratings":[{"movieId":100,"rating":5.0},{"movieId":107,"rating":5.0},{"movieId":121,"rating":5.0}],"alpha":0.05,"topK":10,"minCount":5}"#;

#[tokio::test]
async fn recommend_matches_core_and_is_deterministic() {
    let app = make_app(true);
    let (status, body) = post(&app, THREE_FIVES).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    assert_eq!(post(&app, THREE_FIVES).await.1, body);

    let items = parse(&body)["items"].as_array().unwrap().clone();
    assert_eq!(items.len(), 10);
    let scores: Vec<f64> = items.iter().map(|i| i["score"].as_f64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    for i in &items {
        assert!(![100, 107, 121].contains(&i["movieId"].as_u64().unwrap()));
    }
    let text = String::from_utf8(body.clone()).unwrap();
    assert!(text.contains(r#""score":"#) && text.contains(r#""popularityPart":"#) && text.contains(r#""affinityPart":"#));

    // same request straight through the core, mapped by hand
    let (loaded, catalog) = fixture();
    let m = &loaded.model;
    let dense = |raw: u32| m.meta.item_raw_ids.iter().position(|&r| r == raw).unwrap() as u32;
    let req = FoldInRequest {
        ratings: vec![(dense(100), 5.0), (dense(107), 5.0), (dense(121), 5.0)],
        alpha: 0.05,
        top_k: 10,
        min_ratings: 5,
    };
    let core = recommend(&m.params, &m.meta.hyperparams, &req, &m.meta.item_counts).unwrap();
    assert_eq!(core.len(), items.len());
    for (c, i) in core.iter().zip(&items) {
        let raw = m.meta.item_raw_ids[c.item as usize];
        assert_eq!(i["movieId"].as_u64().unwrap(), raw as u64);
        assert_eq!(i["title"], catalog.title(raw).unwrap());
        let six = |x: f64| format!("{x:.6}").parse::<f64>().unwrap();
        assert_eq!(i["score"].as_f64().unwrap(), six(c.score));
        assert_eq!(i["popularityPart"].as_f64().unwrap(), six(c.popularity_part));
        assert_eq!(i["affinityPart"].as_f64().unwrap(), six(c.affinity_part));
    }
    // every float on the wire carries six decimals
    for key in ["score", "popularityPart", "affinityPart"] {
        for chunk in text.split(&format!("\"{key}\":")).skip(1) {
            let num: String = chunk.chars().take_while(|c| *c == '-' || *c == '.' || c.is_ascii_digit()).collect();
            assert_eq!(num.split('.').nth(1).map(str::len), Some(6), "{key}: {num}");
        }
    }
}

#[tokio::test]
async fn alpha_changes_the_list() {
    let app = make_app(true);
    let mut lists = Vec::new();
    for alpha in [0.0, 0.05, 100.0] {
        let body = THREE_FIVES.replace("0.05", &alpha.to_string());
        let (status, bytes) = post(&app, &body).await;
        assert_eq!(status, StatusCode::OK);
        if alpha == 0.0 {
            let text = String::from_utf8(bytes.clone()).unwrap();
            assert_eq!(text.matches(r#""popularityPart":0.000000,"#).count(), 10);
        }
        lists.push(parse(&bytes)["items"].clone());
    }
    assert_ne!(lists[0], lists[2]);
}

#[tokio::test]
async fn recommend_errors() {
    let app = make_app(true);
    let (status, body) = post(&app, r#"{"ratings":[{"movieId":100,"rating":5.0},{"movieId":9,"rating":4.0},{"movieId":8,"rating":1.0}]}"#).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(parse(&body)["unknownMovieIds"], json!([9, 8]));

    assert_eq!(post(&app, r#"{"ratings":[],"alpha":0}"#).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(post(&app, r#"{"ratings":[{"movieId":100,"rating":4.2}]}"#).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(post(&app, r#"{"ratings":[{"movieId":100,"rating":4.0}],"topK":0}"#).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(post(&app, r#"{"ratings":[{"movieId":100,"rating":4.0}],"alpha":-1}"#).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(post(&app, r#"{"ratings":"#).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(post(&app, r#"{"alpha":1}"#).await.0, StatusCode::BAD_REQUEST);

    // popularity only is fine without ratings; defaults fill the rest
    let (status, body) = post(&app, r#"{"ratings":[],"alpha":1,"minCount":0}"#).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(parse(&body)["items"].as_array().unwrap().len(), 10);

    assert_eq!(post(&make_app(false), THREE_FIVES).await.0, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn model_info_echoes_trailer() {
    let (status, body) = get(&make_app(true), "/api/model/info").await;
    assert_eq!(status, StatusCode::OK);
    let text = String::from_utf8(body).unwrap();
    assert!(text.starts_with(r#"{"k":4,"lambda":0.100000,"tau":0.250000,"epochs":6,"n_users":60,"n_items":30,"global_mean":"#), "{text}");
    assert_eq!(get(&make_app(false), "/api/model/info").await.0, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn cors_allows_browser_origin() {
    let req = Request::get("/api/health").header("origin", "http://localhost:5173").body(Body::empty()).unwrap();
    let resp = make_app(true).oneshot(req).await.unwrap();
    assert_eq!(resp.headers()["access-control-allow-origin"], "*");
}
