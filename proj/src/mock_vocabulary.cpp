#include <array>
#include <span>
#include <string_view>

#include "ragpoison/models.hpp"

namespace ragpoison {

namespace {

constexpr std::array<std::string_view, 256> kVocabulary = {{
    // locations
     "paris", "london", "berlin", "madrid", "rome", "vienna", "lisbon", "dublin", "oslo",
     "stockholm", "helsinki", "copenhagen", "warsaw", "prague", "budapest", "athens", "moscow",
     "cairo", "nairobi", "lagos", "tokyo", "beijing", "shanghai", "seoul", "delhi", "mumbai",
     "bangkok", "jakarta", "manila", "sydney", "melbourne", "auckland", "toronto", "montreal",
     "vancouver", "chicago", "boston", "seattle", "denver", "dallas", "houston", "miami",
     "atlanta", "phoenix", "france", "germany", "spain", "italy", "portugal", "ireland",
     "norway", "sweden", "finland", "denmark", "poland", "egypt", "kenya", "japan", "china",
     "india", "brazil", "canada", "mexico", "australia",
    // people
     "einstein", "newton", "darwin", "curie", "tesla", "edison", "lincoln", "washington",
     "jefferson", "napoleon", "caesar", "cleopatra", "shakespeare", "dickens", "tolstoy",
     "austen", "mozart", "beethoven", "bach", "picasso", "rembrandt", "galileo", "kepler",
     "copernicus", "aristotle", "plato", "socrates", "gandhi", "mandela", "churchill",
     "roosevelt", "kennedy", "obama", "clinton", "bush", "reagan", "nixon", "lennon",
     "mccartney", "elvis", "madonna", "beyonce", "messi", "pele", "jordan", "federer", "nadal",
     "bolt",
    // years
     "1776", "1789", "1815", "1848", "1865", "1889", "1901", "1905", "1914", "1918", "1929",
     "1939", "1945", "1953", "1957", "1961", "1963", "1969", "1972", "1977", "1981", "1984",
     "1989", "1991", "1995", "1997", "1999", "2000", "2001", "2004", "2006", "2008", "2010",
     "2012", "2014", "2016", "2018", "2020", "2021", "2022",
    // numbers
     "2", "3", "4", "5", "6", "7", "8", "9", "10", "11", "12", "15", "20", "25", "30", "40",
     "50", "60", "75", "100", "150", "200", "500", "1000",
    // common words
     "river", "mountain", "island", "ocean", "desert", "forest", "valley", "lake", "city",
     "capital", "country", "kingdom", "empire", "republic", "province", "state", "region",
     "village", "harbor", "bridge", "tower", "castle", "cathedral", "museum", "university",
     "library", "stadium", "airport", "railway", "highway", "company", "band", "album", "novel",
     "film", "song", "painting", "symphony", "opera", "theory", "element", "planet", "galaxy",
     "comet", "moon", "star", "satellite", "rocket", "engine", "computer", "telescope",
     "vaccine", "disease", "treaty", "war", "battle", "revolution", "election", "festival",
     "championship", "trophy", "medal", "prize", "award", "language", "currency", "religion",
     "dynasty", "army", "navy", "parliament", "constitution", "population", "economy",
     "industry", "ancient", "modern", "northern", "southern", "eastern",
}};

}  // namespace

std::span<const std::string_view> mock_vocabulary() { return kVocabulary; }

}  // namespace ragpoison
