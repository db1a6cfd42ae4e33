pub mod sdpa;
