"""Tests for the batching bullwhip simulator."""
