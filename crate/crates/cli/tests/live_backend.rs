//! The live chat backend against a mock OpenAI-compatible endpoint.

use axum::routing::post;
use axum::{Json, Router};
use lbd_agent::{ChatBackend, ChatMessage, ModuleTag, OpenAiBackend, TurnMeta};

async fn completions(Json(body): Json<serde_json::Value>) -> Json<serde_json::Value> {
    // echo enough of the request to assert the wire shape
    let model = body["model"].as_str().unwrap_or("?").to_string();
    let n_messages = body["messages"].as_array().map(Vec::len).unwrap_or(0);
    let temperature = body["temperature"].as_f64().unwrap_or(-1.0);
    Json(serde_json::json!({
        "choices": [{
            "message": {
                "role": "assistant",
                "content": format!("model={model} messages={n_messages} temperature={temperature}")
            }
        }]
    }))
}

fn spawn_mock() -> (std::net::SocketAddr, tokio::sync::oneshot::Sender<()>) {
    let (addr_tx, addr_rx) = std::sync::mpsc::channel();
    let (shutdown_tx, shutdown_rx) = tokio::sync::oneshot::channel::<()>();
    std::thread::spawn(move || {
        let runtime = tokio::runtime::Builder::new_current_thread()
            .enable_all()
            .build()
            .unwrap();
        runtime.block_on(async move {
            let app = Router::new().route("/chat/completions", post(completions));
            let listener = tokio::net::TcpListener::bind(("127.0.0.1", 0)).await.unwrap();
            addr_tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = shutdown_rx.await;
                })
                .await
                .unwrap();
        });
    });
    (addr_rx.recv().unwrap(), shutdown_tx)
}

#[test]
fn openai_backend_speaks_the_chat_completions_wire() {
    let (addr, shutdown) = spawn_mock();
    let backend = OpenAiBackend::new(format!("http://{addr}"), "test-model", Some("key".into()));
    let meta = TurnMeta {
        module: ModuleTag::Generation,
        outer: 1,
        inner: 1,
    };
    let reply = backend
        .complete(
            &[ChatMessage::system("s"), ChatMessage::user("u")],
            0.7,
            &meta,
        )
        .unwrap();
    assert_eq!(reply, "model=test-model messages=2 temperature=0.7");
    let _ = shutdown.send(());
}

#[test]
fn openai_backend_surfaces_transport_failures() {
    // a port with nothing listening
    let backend = OpenAiBackend::new("http://127.0.0.1:1", "m", None);
    let meta = TurnMeta {
        module: ModuleTag::Generation,
        outer: 1,
        inner: 1,
    };
    assert!(backend
        .complete(&[ChatMessage::user("u")], 0.7, &meta)
        .is_err());
}
