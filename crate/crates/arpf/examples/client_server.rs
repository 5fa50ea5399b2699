//! The full client/server round trip over TCP: a server holds dense cosine
//! features (and an SVM model); a client sends only packed sign bits and gets
//! back nearest-database hits or a class label — byte-for-byte the same
//! answer the server-side model gives locally, at 1/64th the query payload.
//!
//! Run with `cargo run --release --example client_server`.

use arpf::dataset::{synth_gaussian_mixture, MixtureSpread};
use arpf::features::{FeatureEmbedding, FeaturePayload, FeatureVector, MapCombo};
use arpf::net::{spawn_server, Client, QueryMode, ServerState};
use arpf::periodic::PeriodicMap;
use arpf::sampling::FrequencySampler;
use arpf::svm::{train_exact, EmbeddingRef, SolverOptions};

fn main() -> arpf::Result<()> {
    // Fixture: a labeled mixture, an exact-kernel model, and a database of
    // dense cosine features for every training row.
    let (m, seed) = (1024usize, 99u64);
    let sampler = FrequencySampler::gaussian_rbf(2.0, 2)?;
    let data = synth_gaussian_mixture(4, 3, 2, 260, 21, MixtureSpread::default())?;
    let (train, test) = data.split_at(240)?;
    let mut model = train_exact(&train, &sampler, 5.0, SolverOptions::default())?;
    // Record which embedding the model will be served with, and derive the
    // support features from it — the server does the same from its database.
    model.inference_embedding = Some(EmbeddingRef {
        sampler: sampler.clone(),
        map: PeriodicMap::Cosine { k: 1 },
        m,
        seed,
    });
    model.rebuild_support_features()?;
    let draw = sampler.draw(m, seed)?;
    let full = FeatureEmbedding::new(draw.clone(), PeriodicMap::Cosine { k: 1 });
    let database: Vec<FeatureVector> = (0..train.len())
        .map(|i| full.embed(train.rows.row(i).as_slice().unwrap()))
        .collect::<arpf::Result<_>>()?;

    let state = ServerState::new(database, Some(model.clone()), m as u32, seed)?;
    let server = spawn_server("127.0.0.1:0", state)?;
    println!("server listening on {}\n", server.addr);

    // Quantized queries: the 20 held-out points, one bit per feature.
    let quantized = FeatureEmbedding::new(draw, PeriodicMap::UniversalQuantizer);
    let queries: Vec<FeatureVector> = (0..test.len())
        .map(|i| quantized.embed(test.rows.row(i).as_slice().unwrap()))
        .collect::<arpf::Result<_>>()?;

    // Similarity mode: top database rows by rescaled one-bit/cosine score.
    let mut sim = Client::connect(server.addr, QueryMode::Similarity, 3, m as u32, seed)?;
    let stats = sim.transfer_stats();
    println!(
        "each query frame carries {} payload bytes instead of {} ({}x smaller)",
        stats.payload_bytes,
        8 * m,
        stats.reduction_factor
    );
    println!("\ntop-3 similarity hits for the first three queries:");
    for (i, query) in queries.iter().take(3).enumerate() {
        let hits = sim.query_similarity(query)?;
        let formatted: Vec<String> = hits
            .iter()
            .map(|(idx, score)| format!("row {idx} ({score:.3})"))
            .collect();
        println!("  query {i}: {}", formatted.join(", "));
    }
    drop(sim);

    // Classify mode: the server runs its model on the query bits; verify the
    // remote label always equals a local prediction through the same code.
    let mut cls = Client::connect(server.addr, QueryMode::Classify, 0, m as u32, seed)?;
    let mut agree = 0;
    let mut correct = 0;
    let truth = test.labels.as_ref().unwrap();
    for (i, query) in queries.iter().enumerate() {
        let remote = cls.query_class(query)?;
        let local = model.predict_with_attached(query, MapCombo::QCos)?;
        agree += i32::from(remote == local);
        correct += i32::from(remote == truth[i]);
    }
    println!("\nclassification over {} one-bit queries:", queries.len());
    println!("  remote == local prediction: {agree}/{}", queries.len());
    println!("  remote == true label:       {correct}/{}", queries.len());
    drop(cls);
    server.shutdown();

    // The packed wire format is lossless: unpacking a query's bits recovers
    // exactly the +-1/sqrt(m) entries the embedding produced.
    if let FeaturePayload::PackedBits { len, .. } = &queries[0].payload {
        println!("\nquery payload is PackedBits with {len} logical entries — no side");
        println!("information beyond m and the shared draw seed travels with it.");
    }
    Ok(())
}
