# Test package for Matt Manim Agent