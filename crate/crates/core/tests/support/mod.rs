pub mod geometry_oracle;
