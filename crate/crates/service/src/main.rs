use std::sync::Arc;
use std::time::Duration;

use adapt_core::llm::ChatTransport;
use adapt_core::session::{SessionContext, SessionStore};
use adapt_service::{router, AppState};

/// Configured through the environment:
/// `ADAPT_ADDR` (default `127.0.0.1:8080`), `ADAPT_STORE` (default
/// `sessions`) and, with the `http` feature, `ADAPT_LLM_URL` plus
/// `OPENAI_API_KEY` for chat-model policies.
#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let addr = std::env::var("ADAPT_ADDR").unwrap_or_else(|_| "127.0.0.1:8080".into());
    let dir = std::env::var("ADAPT_STORE").unwrap_or_else(|_| "sessions".into());
    let store = SessionStore::open(&dir)?;
    let state = AppState::with_system_clock(SessionContext::default(), store, transport()?)?;
    state.spawn_sweeper(Duration::from_secs(1));
    let listener = tokio::net::TcpListener::bind(&addr).await?;
    eprintln!("listening on {addr}, sessions in {dir}");
    axum::serve(listener, router(state)).await?;
    Ok(())
}

#[cfg(feature = "http")]
fn transport() -> Result<Option<Arc<dyn ChatTransport>>, Box<dyn std::error::Error>> {
    match std::env::var("ADAPT_LLM_URL") {
        Ok(url) => Ok(Some(Arc::new(
            adapt_core::llm::transport::HttpTransport::from_env(&url, "OPENAI_API_KEY")?,
        ))),
        Err(_) => Ok(None),
    }
}

#[cfg(not(feature = "http"))]
fn transport() -> Result<Option<Arc<dyn ChatTransport>>, Box<dyn std::error::Error>> {
    Ok(None)
}
